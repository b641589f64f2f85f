//! Fixed-precision decimal output for reals: 17 significant digits, which is
//! enough for every `f64` to survive a text round trip bit-exactly.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON formatter that writes every float with 17 significant digits.
pub(crate) struct RealFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl RealFormatter<'_> {
    pub(crate) fn new() -> Self {
        Self {
            inner: PrettyFormatter::with_indent(b"  "),
        }
    }
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(
            fn $name<W: ?Sized + io::Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.inner.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl Formatter for RealFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if !value.is_finite() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "non-finite real cannot be written as JSON",
            ));
        }
        writer.write_all(format_real(value).as_bytes())
    }

    // serde_json turns NaN and infinities into `null` before reaching
    // `write_f64`; our documents never hold genuine nulls, so refuse them all.
    fn write_null<W: ?Sized + io::Write>(&mut self, _writer: &mut W) -> io::Result<()> {
        Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "non-finite real cannot be written as JSON",
        ))
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }
}

/// Serializes `value` as pretty JSON with fixed-precision reals. Non-finite
/// reals are rejected since JSON cannot represent them, and so is `null`
/// (absent optional fields must be skipped instead).
pub fn to_json_string<T: Serialize>(value: &T) -> crate::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, RealFormatter::new());
    value
        .serialize(&mut ser)
        .map_err(|e| {
            if e.is_io() {
                crate::Error::NonFinite("serialized document")
            } else {
                crate::Error::Json(e)
            }
        })?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}
