//! `--levels` notation: `a..b` or `a,b,c`, each entry an exponent giving
//! `n = 2^a` cells per unit length.

use std::str::FromStr;

const MAX_EXPONENT: u32 = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Levels(pub Vec<u32>);

impl Levels {
    pub fn cells_per_unit(&self) -> Vec<usize> {
        self.0.iter().map(|&a| 1usize << a).collect()
    }
}

fn exponent(s: &str) -> Result<u32, String> {
    let a: u32 = s
        .trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a non-negative integer"))?;
    if a > MAX_EXPONENT {
        return Err(format!("level {a} exceeds {MAX_EXPONENT}"));
    }
    Ok(a)
}

impl FromStr for Levels {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
            let (a, b) = (exponent(a)?, exponent(b)?);
            if a > b {
                return Err(format!("empty range {s}"));
            }
            (a..=b).collect()
        } else {
            s.split(',').map(exponent).collect::<Result<_, _>>()?
        };
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(format!("levels must be strictly ascending: {s}"));
        }
        Ok(Levels(v))
    }
}
