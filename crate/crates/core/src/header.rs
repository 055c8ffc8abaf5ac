//! `#key=value<TAB>key=value` header lines shared by the text file formats.

use crate::{Error, Result};

pub(crate) fn parse_header(line: &str, lineno: usize) -> Result<Vec<(String, String)>> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::format(lineno, "header must start with `#`"))?;
    body.split('\t')
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::format(lineno, format!("bad header field `{kv}`")))
        })
        .collect()
}

pub(crate) fn header_field<'a>(
    fields: &'a [(String, String)],
    key: &str,
    lineno: usize,
) -> Result<&'a str> {
    fields
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::format(lineno, format!("header lacks `{key}`")))
}

pub(crate) fn header_num<T: std::str::FromStr>(
    fields: &[(String, String)],
    key: &str,
    lineno: usize,
) -> Result<T> {
    let v = header_field(fields, key, lineno)?;
    v.parse()
        .map_err(|_| Error::format(lineno, format!("bad value `{v}` for `{key}`")))
}
