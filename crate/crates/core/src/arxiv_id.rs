//! arXiv identifier handling.
//!
//! Every paper is keyed by its base identifier, the id without a version
//! suffix. New-style ids look like `2303.08774`, old-style ones like
//! `hep-ph/9901001`; either may arrive with a trailing `v3` from feeds or
//! user input. All lookups, deduplication and persistence use the base id.

use crate::error::{Error, Result};

/// Strips an optional `arXiv:` prefix and a trailing `vN` version suffix,
/// returning the base identifier. Idempotent: normalizing an already
/// normalized id returns it unchanged.
pub fn normalize_arxiv_id(raw: &str) -> Result<String> {
    let trimmed = raw.trim();
    let trimmed = trimmed
        .strip_prefix("arXiv:")
        .or_else(|| trimmed.strip_prefix("arxiv:"))
        .unwrap_or(trimmed);
    if trimmed.is_empty() {
        return Err(Error::InvalidArxivId {
            raw: raw.to_owned(),
            reason: "empty identifier".to_owned(),
        });
    }

    let digits = trimmed
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_digit())
        .count();
    let head = &trimmed[..trimmed.len() - digits];
    if let Some(stem) = head.strip_suffix('v') {
        if digits == 0 {
            return Err(Error::InvalidArxivId {
                raw: raw.to_owned(),
                reason: "version suffix with no digits".to_owned(),
            });
        }
        if stem.is_empty() {
            return Err(Error::InvalidArxivId {
                raw: raw.to_owned(),
                reason: "identifier is only a version suffix".to_owned(),
            });
        }
        return Ok(stem.to_owned());
    }
    Ok(trimmed.to_owned())
}

/// Extracts the base id from an abstract-page URL such as
/// `http://arxiv.org/abs/2303.08774v3`. Plain ids pass through unchanged.
pub fn base_id_from_link(link: &str) -> Result<String> {
    let tail = link
        .rsplit_once("/abs/")
        .map(|(_, tail)| tail)
        .unwrap_or(link);
    normalize_arxiv_id(tail)
}

/// Abstract-page URL for a base id.
pub fn abs_link(base_id: &str) -> String {
    format!("http://arxiv.org/abs/{base_id}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_version_suffix() {
        assert_eq!(normalize_arxiv_id("2303.08774v3").unwrap(), "2303.08774");
        assert_eq!(normalize_arxiv_id("2302.13971v1").unwrap(), "2302.13971");
        assert_eq!(normalize_arxiv_id("hep-ph/9901001v2").unwrap(), "hep-ph/9901001");
    }

    #[test]
    fn leaves_base_ids_alone() {
        assert_eq!(normalize_arxiv_id("2303.08774").unwrap(), "2303.08774");
        assert_eq!(normalize_arxiv_id("cs/0112017").unwrap(), "cs/0112017");
    }

    #[test]
    fn strips_scheme_prefix() {
        assert_eq!(normalize_arxiv_id("arXiv:2303.08774v2").unwrap(), "2303.08774");
    }

    #[test]
    fn rejects_empty() {
        assert!(matches!(
            normalize_arxiv_id("  "),
            Err(Error::InvalidArxivId { .. })
        ));
    }

    #[test]
    fn rejects_bare_version_suffix() {
        let err = normalize_arxiv_id("2303.08774v").unwrap_err();
        match err {
            Error::InvalidArxivId { reason, .. } => {
                assert!(reason.contains("no digits"), "{reason}")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn link_round_trip() {
        let id = "2303.08774";
        assert_eq!(base_id_from_link(&abs_link(id)).unwrap(), id);
        assert_eq!(
            base_id_from_link("http://arxiv.org/abs/2210.02414v2").unwrap(),
            "2210.02414"
        );
    }
}
