//! JSON helpers shared by the report writers.

use serde::Serialize;

use crate::Result;

/// Serialize with object keys in lexicographic order.
///
/// `serde_json::Value` maps are `BTreeMap`s unless `preserve_order` is
/// enabled, so a round-trip through `Value` sorts every nested object.
pub fn to_sorted_value<T: Serialize>(value: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(value)?)
}

pub fn to_sorted_string<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(&to_sorted_value(value)?)?)
}

pub fn to_sorted_string_pretty<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&to_sorted_value(value)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Unordered {
        zeta: u8,
        alpha: u8,
        mid: Inner,
    }

    #[derive(Serialize)]
    struct Inner {
        b: u8,
        a: u8,
    }

    #[test]
    fn keys_are_sorted_at_every_level() {
        let s = to_sorted_string(&Unordered {
            zeta: 1,
            alpha: 2,
            mid: Inner { b: 3, a: 4 },
        })
        .unwrap();
        assert_eq!(s, r#"{"alpha":2,"mid":{"a":4,"b":3},"zeta":1}"#);
    }
}
