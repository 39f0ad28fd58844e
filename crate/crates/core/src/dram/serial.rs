//! Text serialisation of [`FlipModel`]: one header block and one `cell`
//! record per flippy cell. Floats use Rust's shortest round-trip formatting,
//! so `parse(render(m)) == m` exactly.

use std::fmt::Write as _;

use super::model::{BankCurve, FillPattern, FlipCell, FlipModel};
use super::DramError;

const MAGIC: &str = "flipmodel";
const VERSION: u32 = 1;

pub fn render(model: &FlipModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {VERSION}");
    let _ = writeln!(s, "seed {}", model.rng_seed);
    let pats: Vec<String> = model.patterns().iter().map(ToString::to_string).collect();
    let _ = writeln!(s, "patterns {}", pats.join(" "));
    match model.bank_curve {
        Some(c) => {
            let _ = writeln!(s, "bank_curve {} {}", c.peak, c.drop);
        }
        None => s.push_str("bank_curve none\n"),
    }
    for c in model.cells() {
        let _ = write!(
            s,
            "cell {} {} {} {} {} {}",
            c.bank, c.row, c.row_bit, c.direction, c.base_prob, c.resident_factor
        );
        for m in &c.multipliers {
            let _ = write!(s, " {m}");
        }
        s.push('\n');
    }
    s
}

fn field<T: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize) -> Result<T, DramError> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| DramError::Parse(format!("line {line}: bad or missing {what}")))
}

pub fn parse(text: &str) -> Result<FlipModel, DramError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut next = |key: &str| -> Result<(usize, Vec<&str>), DramError> {
        let (i, l) = lines.next().ok_or_else(|| DramError::Parse(format!("missing {key} line")))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks[0] != key {
            return Err(DramError::Parse(format!("line {}: expected {key}", i + 1)));
        }
        Ok((i + 1, toks[1..].to_vec()))
    };
    let (n, v) = next(MAGIC)?;
    let version: u32 = field(v.first().copied(), "version", n)?;
    if version != VERSION {
        return Err(DramError::Parse(format!("unsupported version {version}")));
    }
    let (n, v) = next("seed")?;
    let seed: u64 = field(v.first().copied(), "seed", n)?;
    let (_, v) = next("patterns")?;
    let patterns = v.iter().map(|t| t.parse::<FillPattern>()).collect::<Result<Vec<_>, _>>()?;
    let (n, v) = next("bank_curve")?;
    let bank_curve = match v.as_slice() {
        ["none"] => None,
        [peak, drop] => Some(BankCurve { peak: field(Some(peak), "peak", n)?, drop: field(Some(drop), "drop", n)? }),
        _ => return Err(DramError::Parse(format!("line {n}: bad bank_curve"))),
    };
    let mut model = FlipModel::with_patterns(patterns, seed);
    model.bank_curve = bank_curve;
    loop {
        let (n, v) = match next("cell") {
            Ok(x) => x,
            Err(DramError::Parse(m)) if m.starts_with("missing") => break,
            Err(e) => return Err(e),
        };
        let mut it = v.into_iter();
        let bank = field(it.next(), "bank", n)?;
        let row = field(it.next(), "row", n)?;
        let row_bit = field(it.next(), "row_bit", n)?;
        let direction = field(it.next(), "direction", n)?;
        let base_prob = field(it.next(), "base_prob", n)?;
        let resident_factor = field(it.next(), "resident_factor", n)?;
        let multipliers = it.map(|t| field(Some(t), "multiplier", n)).collect::<Result<Vec<f64>, _>>()?;
        model.add_cell(FlipCell { bank, row, row_bit, direction, base_prob, resident_factor, multipliers })?;
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dram::model::FlipDirection;
    use proptest::prelude::*;

    fn arb_cell(n_patterns: usize) -> impl Strategy<Value = FlipCell> {
        (
            0u32..8,
            0u32..4096,
            0u32..65536,
            any::<bool>(),
            0.0f64..=1.0,
            0.0f64..2.0,
            proptest::collection::vec(0.0f64..4.0, n_patterns),
        )
            .prop_map(|(bank, row, row_bit, d, base_prob, resident_factor, multipliers)| FlipCell {
                bank,
                row,
                row_bit,
                direction: FlipDirection::from_source(d),
                base_prob,
                resident_factor,
                multipliers,
            })
    }

    proptest! {
        #[test]
        fn roundtrip_is_exact(seed in any::<u64>(), cells in proptest::collection::vec(arb_cell(3), 0..40), curve in any::<bool>()) {
            let mut m = FlipModel::with_patterns(vec![FillPattern::AllOnes, FillPattern::AllZeros, FillPattern::Block(4)], seed);
            if curve {
                m.bank_curve = Some(BankCurve { peak: 8, drop: 0.1 + 1.0 / 3.0 });
            }
            for c in cells {
                m.add_cell(c).unwrap();
            }
            let text = render(&m);
            prop_assert_eq!(parse(&text).unwrap(), m);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("").is_err());
        assert!(parse("flipmodel 2\n").is_err());
        let m = FlipModel::new(1);
        let bad = render(&m) + "cell 0 0 1 sideways 0.5 1 1 1\n";
        assert!(parse(&bad).is_err());
    }
}
