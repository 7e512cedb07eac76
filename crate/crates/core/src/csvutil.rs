use crate::error::{Error, Result};

pub(crate) fn write_rows<I, R, S>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv output is utf-8")
}

/// Reads records after checking the header. Lines starting with `#` are
/// skipped.
pub(crate) fn read_rows(what: &'static str, text: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let found = r.headers().map_err(|e| Error::format(what, e))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::format(what, format!("unexpected header {found:?}")));
    }
    r.records().map(|rec| rec.map_err(|e| Error::format(what, e))).collect()
}

pub(crate) fn field<T: std::str::FromStr>(what: &'static str, rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec
        .get(i)
        .ok_or_else(|| Error::format(what, format!("missing column {i}")))?;
    raw.parse()
        .map_err(|_| Error::format(what, format!("cannot parse {raw:?} in column {i}")))
}
