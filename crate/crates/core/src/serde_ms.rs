//! Serializes [`SimTime`] as fractional milliseconds.

use serde::{Deserialize, Deserializer, Serializer};

use crate::time::SimTime;

pub fn serialize<S: Serializer>(t: &SimTime, s: S) -> Result<S::Ok, S::Error> {
    if t.as_micros().is_multiple_of(1000) {
        s.serialize_u64(t.as_millis())
    } else {
        s.serialize_f64(t.as_millis_f64())
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SimTime, D::Error> {
    let ms = f64::deserialize(d)?;
    if !ms.is_finite() || ms < 0.0 {
        return Err(serde::de::Error::custom(format!(
            "time must be a non-negative number of ms, got {ms}"
        )));
    }
    Ok(SimTime::from_millis_f64(ms))
}

pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(t: &Option<SimTime>, s: S) -> Result<S::Ok, S::Error> {
        match t {
            Some(t) => super::serialize(t, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<SimTime>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super")] SimTime);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}
