use std::sync::LazyLock;

use regex::Regex;

/// Special-character pattern used by the upstream preprocessing. `&nbsp` is
/// matched without its trailing `;`, exactly as the pattern was published.
static SPECIAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\t\n\r\x{200b}]|//|&nbsp").unwrap());

static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^<>]*>").unwrap());

static ENTITY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"&(?:#[0-9]+|#[xX][0-9a-fA-F]+|[A-Za-z][A-Za-z0-9]*);").unwrap());

/// Normalizes a raw title or text field.
///
/// Special characters matched by the preprocessing pattern are replaced by a
/// space, HTML tags and entities are removed (the text between tags is kept),
/// whitespace runs collapse to one space and the result is trimmed.
///
/// ```
/// use foodaug_core::corpus::clean_text;
/// assert_eq!(clean_text("<p>Hello <b>world</b></p>"), "Hello world");
/// assert_eq!(clean_text("path//to&nbsp;x"), "path to ;x");
/// ```
pub fn clean_text(raw: &str) -> String {
    let mut s = SPECIAL.replace_all(raw, " ").into_owned();
    // Nested brackets such as `<<b>>` only disappear after repeated passes.
    loop {
        let next = TAG.replace_all(&s, " ");
        if next.len() == s.len() {
            break;
        }
        s = next.into_owned();
    }
    let s = ENTITY.replace_all(&s, " ");
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
