//! Byte-stable JSON: sorted object keys and every float written with 17
//! significant digits.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StableFormatter;

impl Formatter for StableFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Single-line JSON with sorted keys.
pub fn to_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    // Going through `Value` sorts the keys (its map is a BTreeMap).
    let value = serde_json::to_value(value)?;
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, StableFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_sorted_and_floats_fixed() {
        let s = to_string(&json!({"b": 0.1, "a": [1, 2.5], "c": -3e-5})).unwrap();
        assert_eq!(
            s,
            r#"{"a":[1,2.5000000000000000e0],"b":1.0000000000000001e-1,"c":-3.0000000000000001e-5}"#
        );
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1f64, 1.0 / 3.0, -std::f64::consts::E, 1e-300, 6.02e23] {
            let s = to_string(&v).unwrap();
            assert_eq!(
                serde_json::from_str::<f64>(&s).unwrap().to_bits(),
                v.to_bits()
            );
        }
    }
}
