//! CSV columns for indices and numbers.

use curvelab::geometry::CurveletIndex;

use crate::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn index_header(prefix: &str, d: usize) -> Vec<String> {
    let mut h: Vec<String> = ["case", "d", "m", "j", "e", "s"].iter().map(|c| format!("{prefix}{c}")).collect();
    h.extend((0..=d).map(|i| format!("{prefix}k{i}")));
    h
}

pub fn index_fields(idx: &CurveletIndex) -> Vec<String> {
    // the literal is `case=..,d=..,m=..,j=..,e=..,s=..,k=k0,k1,..`
    let lit = idx.to_string();
    let mut out = Vec::new();
    let mut in_k = false;
    for part in lit.split(',') {
        match part.split_once('=') {
            Some(("k", v)) => {
                in_k = true;
                out.push(v.to_string());
            }
            Some((_, v)) => out.push(v.to_string()),
            None if in_k => out.push(part.to_string()),
            None => unreachable!("index literal has a stray token"),
        }
    }
    out
}

/// Parses the index stored in `fields` starting at column `at`, with the
/// column layout of `index_header`.
pub fn parse_index(fields: &[&str], at: usize, line: usize) -> Result<CurveletIndex, CliError> {
    let bad = |msg: String| CliError::Input(format!("line {line}: {msg}"));
    let get = |i: usize| fields.get(at + i).copied().ok_or_else(|| bad("missing index columns".into()));
    let d: usize = get(1)?.trim().parse().map_err(|_| bad(format!("bad d '{}'", fields[at + 1])))?;
    let ks: Vec<&str> = (0..=d).map(|i| get(6 + i)).collect::<Result<_, _>>()?;
    let lit = format!(
        "case={},d={},m={},j={},e={},s={},k={}",
        get(0)?.trim(),
        d,
        get(2)?.trim(),
        get(3)?.trim(),
        get(4)?.trim(),
        get(5)?.trim(),
        ks.iter().map(|k| k.trim()).collect::<Vec<_>>().join(",")
    );
    lit.parse().map_err(|e: curvelab::CurveletError| bad(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_columns_round_trip() {
        for lit in ["case=kg,d=1,m=0,j=2,e=+,s=tp,k=0,-3", "case=wave,d=3,m=1,j=4,e=s/-1/2,s=tm,k=1,2,3,-4"] {
            let idx: CurveletIndex = lit.parse().unwrap();
            let f = index_fields(&idx);
            assert_eq!(f.len(), index_header("", idx.d()).len());
            let refs: Vec<&str> = f.iter().map(String::as_str).collect();
            assert_eq!(parse_index(&refs, 0, 1).unwrap(), idx);
        }
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, -1.0 / 3.0, 6.02e23, 5e-324, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
