//! JSON input/output formats.

/// Serializes exact rationals as `"p/q"` strings; accepts strings or numbers.
pub mod qvec_serde {
    use num_rational::BigRational;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::rational::{format_rational, from_f64, parse_rational};

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(crate) enum RationalLiteral {
        Text(String),
        Int(i64),
        Float(f64),
    }

    impl RationalLiteral {
        pub(crate) fn to_rational(&self) -> Result<BigRational, String> {
            match self {
                RationalLiteral::Text(s) => parse_rational(s).map_err(|e| e.to_string()),
                RationalLiteral::Int(i) => Ok(BigRational::from_integer((*i).into())),
                RationalLiteral::Float(x) => from_f64(*x).ok_or_else(|| format!("non-finite {x}")),
            }
        }
    }

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        let strings: Vec<String> = v.iter().map(format_rational).collect();
        strings.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let raw: Vec<RationalLiteral> = Vec::deserialize(d)?;
        raw.iter()
            .map(|r| r.to_rational().map_err(D::Error::custom))
            .collect()
    }
}

/// `Option<Vec<BigRational>>` in the same format.
pub mod opt_qvec_serde {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<BigRational>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => super::qvec_serde::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<BigRational>>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::qvec_serde")] Vec<BigRational>);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

/// Ray lists: integers are written as JSON numbers, other rationals as
/// `"p/q"` strings.
pub mod rays_serde {
    use num_rational::BigRational;
    use num_traits::ToPrimitive;
    use serde::de::Error as _;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::qvec_serde::RationalLiteral;
    use crate::rational::format_rational;

    #[derive(Serialize)]
    #[serde(untagged)]
    enum Entry {
        Int(i64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(rays: &[Vec<BigRational>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(rays.len()))?;
        for r in rays {
            let row: Vec<Entry> = r
                .iter()
                .map(|x| match (x.is_integer(), x.to_integer().to_i64()) {
                    (true, Some(i)) => Entry::Int(i),
                    _ => Entry::Text(format_rational(x)),
                })
                .collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigRational>>, D::Error> {
        let raw: Vec<Vec<RationalLiteral>> = Vec::deserialize(d)?;
        raw.iter()
            .map(|row| {
                row.iter()
                    .map(|r| r.to_rational().map_err(D::Error::custom))
                    .collect()
            })
            .collect()
    }
}

use std::path::Path;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::PipelineError;

/// The cone input file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    #[serde(with = "rays_serde")]
    pub rays: Vec<Vec<BigRational>>,
    #[serde(default, with = "opt_qvec_serde", skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<BigRational>>,
    #[serde(default, with = "opt_qvec_serde", skip_serializing_if = "Option::is_none")]
    pub l: Option<Vec<BigRational>>,
}

const BUNDLED: [(&str, &str); 4] = [
    ("quadrant2", include_str!("../../data/quadrant2.json")),
    ("quadrant3", include_str!("../../data/quadrant3.json")),
    ("conifold", include_str!("../../data/conifold.json")),
    ("c3z2", include_str!("../../data/c3z2.json")),
];

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|b| b.0).collect()
}

/// A bundled example cone by name (`quadrant2`, `quadrant3`, `conifold`, `c3z2`).
pub fn bundled(name: &str) -> Option<ConeFile> {
    let name = name.strip_suffix(".json").unwrap_or(name);
    BUNDLED
        .iter()
        .find(|b| b.0 == name)
        .map(|b| serde_json::from_str(b.1).expect("bundled cone files are valid"))
}

pub fn parse_cone(text: &str, origin: &str) -> Result<ConeFile, PipelineError> {
    serde_json::from_str(text).map_err(|e| PipelineError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })
}

/// Reads a cone file; a path that does not exist but names a bundled
/// example loads that example.
pub fn load_cone(path: &Path) -> Result<ConeFile, PipelineError> {
    match std::fs::read_to_string(path) {
        Ok(text) => parse_cone(&text, &path.display().to_string()),
        Err(e) => {
            if !path.exists() {
                if let Some(c) = path.to_str().and_then(bundled) {
                    return Ok(c);
                }
            }
            Err(PipelineError::Io {
                path: path.display().to_string(),
                message: e.to_string(),
            })
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    std::fs::write(path, text + "\n").map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
