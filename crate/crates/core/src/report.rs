//! Serialization helpers shared by every report.
//!
//! Reports are plain JSON with struct-ordered keys. Reals use the shortest
//! representation that round-trips exactly; values that JSON cannot hold
//! (`±∞`, NaN) are written as the strings `"inf"`, `"-inf"` and `"nan"`.

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

#[derive(Deserialize)]
#[serde(untagged)]
enum RealRepr {
    Num(f64),
    Str(String),
}

fn from_repr<E: de::Error>(r: RealRepr) -> Result<f64, E> {
    match r {
        RealRepr::Num(v) => Ok(v),
        RealRepr::Str(s) => match s.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => Err(E::custom(format!("not a real: `{other}`"))),
        },
    }
}

fn write<S: Serializer>(v: f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

/// `#[serde(with = "real")]` for `f64` fields that may be infinite.
pub mod real {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        write(*v, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(RealRepr::deserialize(d)?)
    }
}

/// `#[serde(with = "real_vec")]` for `Vec<f64>` fields.
pub mod real_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        struct Real(f64);
        impl Serialize for Real {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                write(self.0, s)
            }
        }
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&Real(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<RealRepr>::deserialize(d)?.into_iter().map(from_repr).collect()
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports are always serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Deserialize, Debug, PartialEq)]
    struct Probe {
        #[serde(with = "real")]
        a: f64,
        #[serde(with = "real_vec")]
        b: Vec<f64>,
    }

    #[test]
    fn infinities_survive_a_round_trip() {
        let p = Probe { a: f64::INFINITY, b: vec![0.5, f64::NEG_INFINITY, 1e-300] };
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"a":"inf","b":[0.5,"-inf",1e-300]}"#);
        assert_eq!(serde_json::from_str::<Probe>(&json).unwrap(), p);
    }

    #[test]
    fn shortest_repr_is_lossless() {
        let x = 2.0_f64 / 3.0;
        let json = serde_json::to_string(&Probe { a: x, b: vec![] }).unwrap();
        let back: Probe = serde_json::from_str(&json).unwrap();
        assert_eq!(back.a.to_bits(), x.to_bits());
        assert!(serde_json::from_str::<Probe>(r#"{"a":"lots","b":[]}"#).is_err());
    }
}
