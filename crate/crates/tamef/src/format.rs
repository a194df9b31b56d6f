//! Output formats: JSON and CSV with 17-significant-digit floats, LF line
//! endings, written atomically.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use tamef_core::{ScalarField, TruncatedSequence};

/// Name of the probe generator recorded in every output.
pub const GENERATOR: &str = "chacha8";

/// `x` with 17 significant digits; empty for non-finite values in tables.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Pretty printer that writes every float as `d.dddddddddddddddde±x`.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// JSON document with the generator and seed in front.
#[derive(Serialize)]
pub struct Tagged<'a, T: Serialize> {
    pub generator: &'static str,
    pub seed: u64,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn tagged<T: Serialize>(seed: u64, body: &T) -> Tagged<'_, T> {
    Tagged { generator: GENERATOR, seed, body }
}

/// CSV text: a `# generator=… seed=…` comment, the header, then rows.
pub fn csv_table(seed: u64, header: &[&str], rows: &[Vec<String>]) -> csv::Result<String> {
    let mut out = format!("# generator={GENERATOR} seed={seed}\n").into_bytes();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(String::from_utf8(out).expect("CSV fields are UTF-8"))
}

/// Writes `contents` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// `{fiber: {dim, field, norm}, coefficients: [[[re, im], …], …]}`; real
/// fibers drop the imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceDocument {
    pub fiber: tamef_core::BanachFiber,
    pub coefficients: Vec<Vec<serde_json::Value>>,
}

impl From<&TruncatedSequence> for SequenceDocument {
    fn from(f: &TruncatedSequence) -> Self {
        let real = f.fiber().field() == ScalarField::Real;
        let coefficients = f
            .coefficients()
            .iter()
            .map(|c| {
                c.iter()
                    .map(|z| if real { serde_json::json!(z.re) } else { serde_json::json!([z.re, z.im]) })
                    .collect()
            })
            .collect();
        SequenceDocument { fiber: *f.fiber(), coefficients }
    }
}
