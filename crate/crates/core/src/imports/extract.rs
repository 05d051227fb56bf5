//! Line-grammar import extraction for the five target languages.
//!
//! Extraction is pattern based rather than AST based: the corpus is too
//! heterogeneous (broken files, mixed dialects) for strict parsers, and the
//! downstream co-occurrence analysis only needs stable package identities.
//! Unparseable lines are skipped. For Python, Java and C#, import-like text
//! inside comments and string blocks is not scanned.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

use crate::corpus::Language;

/// Extracts normalized top-level package names from one source file.
pub fn extract_imports(source: &str, language: Language) -> BTreeSet<String> {
    let mut packages = BTreeSet::new();
    match language {
        Language::Python => extract_python(source, &mut packages),
        Language::NodeJs => extract_node(source, &mut packages),
        Language::Java => extract_java(source, &mut packages),
        Language::CSharp => extract_csharp(source, &mut packages),
        Language::Php => extract_php(source, &mut packages),
    }
    packages.retain(|p| !p.is_empty());
    packages
}

static PY_IMPORT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*import\s+(.+)$").unwrap());
static PY_FROM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*from\s+([A-Za-z_][\w.]*)\s+import\b").unwrap());

fn extract_python(source: &str, out: &mut BTreeSet<String>) {
    let mut in_string = false;
    for line in source.lines() {
        let toggles = count_triple_quotes(line);
        if in_string {
            if toggles % 2 == 1 {
                in_string = false;
            }
            continue;
        }
        if let Some(cap) = PY_FROM.captures(line) {
            // `from . import x` never matches: the module must start with a
            // letter, which excludes relative imports.
            out.insert(first_segment(&cap[1], '.').to_lowercase());
        } else if let Some(cap) = PY_IMPORT.captures(line) {
            for item in cap[1].split(',') {
                let name = item.trim().split_whitespace().next().unwrap_or("");
                if name
                    .chars()
                    .next()
                    .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                {
                    out.insert(first_segment(name, '.').to_lowercase());
                }
            }
        }
        if toggles % 2 == 1 {
            in_string = true;
        }
    }
}

fn count_triple_quotes(line: &str) -> usize {
    line.matches("\"\"\"").count() + line.matches("'''").count()
}

static JS_REQUIRE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"\brequire\s*\(\s*['"]([^'"]+)['"]\s*\)"#).unwrap());
static JS_IMPORT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"\bimport\s+(?:[\w$]+\s*,\s*)?(?:[\w${}*,\s]+?\s+from\s+)?['"]([^'"]+)['"]"#)
        .unwrap()
});
static JS_DYNAMIC: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"\bimport\s*\(\s*['"]([^'"]+)['"]\s*\)"#).unwrap());

fn extract_node(source: &str, out: &mut BTreeSet<String>) {
    for line in source.lines() {
        for re in [&*JS_REQUIRE, &*JS_IMPORT, &*JS_DYNAMIC] {
            for cap in re.captures_iter(line) {
                if let Some(name) = normalize_node_specifier(&cap[1]) {
                    out.insert(name);
                }
            }
        }
    }
}

/// Module specifier up to its first slash; scoped packages keep two
/// segments. Relative and filesystem-path specifiers are local code.
fn normalize_node_specifier(spec: &str) -> Option<String> {
    let spec = spec.trim().strip_prefix("node:").unwrap_or(spec.trim());
    if spec.is_empty() || spec.starts_with('.') || spec.starts_with('/') {
        return None;
    }
    if let Some(rest) = spec.strip_prefix('@') {
        let mut parts = rest.splitn(3, '/');
        let org = parts.next()?;
        let pkg = parts.next()?;
        if org.is_empty() || pkg.is_empty() {
            return None;
        }
        return Some(format!("@{org}/{pkg}"));
    }
    Some(first_segment(spec, '/').to_string())
}

static JAVA_IMPORT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*import\s+(?:static\s+)?([A-Za-z_][\w.]*?)(\.\*)?\s*;").unwrap()
});

fn extract_java(source: &str, out: &mut BTreeSet<String>) {
    for line in comment_free_lines(source) {
        if let Some(cap) = JAVA_IMPORT.captures(&line) {
            let name = &cap[1];
            if cap.get(2).is_some() {
                // Wildcard import: the dotted name already is the package.
                out.insert(name.to_string());
            } else if let Some((package, _class)) = name.rsplit_once('.') {
                out.insert(package.to_string());
            }
        }
    }
}

static CSHARP_USING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^\s*(?:global\s+)?using\s+(?:static\s+)?(?:[A-Za-z_]\w*\s*=\s*)?([A-Za-z_][\w.]*)\s*;\s*(?://.*)?$",
    )
    .unwrap()
});

fn extract_csharp(source: &str, out: &mut BTreeSet<String>) {
    for line in comment_free_lines(source) {
        if let Some(cap) = CSHARP_USING.captures(&line) {
            // Alias and static forms unwrap to the full namespace text.
            out.insert(cap[1].to_string());
        }
    }
}

static PHP_USE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*use\s+(?:function\s+|const\s+)?\\?([A-Za-z_]\w*)").unwrap()
});

fn extract_php(source: &str, out: &mut BTreeSet<String>) {
    // `require`/`include` take quoted local paths and contribute no package
    // identity, so only `use` declarations are scanned.
    for line in comment_free_lines(source) {
        if let Some(cap) = PHP_USE.captures(&line) {
            out.insert(cap[1].to_string());
        }
    }
}

/// Streams lines with `/* ... */` block interiors and triple-quoted text
/// blocks removed, so anchored patterns never fire inside them.
fn comment_free_lines(source: &str) -> impl Iterator<Item = String> + '_ {
    let mut in_block = false;
    let mut in_text_block = false;
    source.lines().map(move |line| {
        let mut result = String::new();
        let mut rest = line;
        loop {
            if in_text_block {
                match rest.find("\"\"\"") {
                    Some(pos) => {
                        in_text_block = false;
                        rest = &rest[pos + 3..];
                    }
                    None => break,
                }
            } else if in_block {
                match rest.find("*/") {
                    Some(pos) => {
                        in_block = false;
                        rest = &rest[pos + 2..];
                    }
                    None => break,
                }
            } else {
                let block = rest.find("/*");
                let text = rest.find("\"\"\"");
                match (block, text) {
                    (Some(b), t) if t.is_none_or(|t| b < t) => {
                        result.push_str(&rest[..b]);
                        in_block = true;
                        rest = &rest[b + 2..];
                    }
                    (_, Some(t)) => {
                        result.push_str(&rest[..t]);
                        in_text_block = true;
                        rest = &rest[t + 3..];
                    }
                    _ => {
                        result.push_str(rest);
                        break;
                    }
                }
            }
        }
        result
    })
}

fn first_segment(s: &str, sep: char) -> &str {
    s.split(sep).next().unwrap_or(s)
}
