//! Emitters for the two text formats the engine reads back: integral files
//! and labelled one-body operator files. Values are printed with enough
//! digits that a write/parse round trip reproduces every element exactly.

use kickci::{IntegralSet, OneBodyOperator};

fn push_record(out: &mut String, v: f64, i: usize, j: usize, k: usize, l: usize) {
    out.push_str(&format!("{v:24.16E} {i:4} {j:4} {k:4} {l:4}\n"));
}

pub fn write_fcidump(ints: &IntegralSet) -> String {
    let mut out = format!(
        "&FCI NORB={},NELEC={},MS2={},\n",
        ints.norb, ints.nelec, ints.ms2
    );
    if let Some(orbsym) = &ints.orbsym {
        let syms: Vec<String> = orbsym.iter().map(|s| s.to_string()).collect();
        out.push_str(&format!("  ORBSYM={},\n", syms.join(",")));
    }
    if let Some(isym) = ints.isym {
        out.push_str(&format!("  ISYM={isym},\n"));
    }
    out.push_str("&END\n");
    for (v, i, j, k, l) in ints.records() {
        push_record(&mut out, v, i, j, k, l);
    }
    if ints.e_core != 0.0 {
        push_record(&mut out, ints.e_core, 0, 0, 0, 0);
    }
    out
}

pub fn write_operator(op: &OneBodyOperator) -> String {
    let n = op.matrix.nrows();
    let mut out = format!("&OPER NORB={}", n);
    if !op.label.is_empty() {
        out.push_str(&format!(",LABEL={}", op.label));
    }
    out.push_str(" &END\n");
    for p in 0..n {
        for q in 0..=p {
            let v = op.matrix[(p, q)];
            if v != 0.0 {
                push_record(&mut out, v, p + 1, q + 1, 0, 0);
            }
        }
    }
    out
}
