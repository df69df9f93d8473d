//! Line-oriented reaction file format.
//!
//! ```text
//! # comment line
//! volume 1.0
//! A -> 2A @ 1.0
//! A + B -> 0 @ 1.0 # death
//! A1 + B0 -> A1 + Y0 @ 1e-11 # conjugation
//! ```
//!
//! Each reaction line is `reactants -> products @ rate`, optionally
//! followed by `# tag` where tag is one of `duplication`, `death`, `logic`,
//! `conjugation`, `other`. A side is `0`, empty, or `+`-separated terms
//! `[coef]Name` (the coefficient may be separated by whitespace). Species are
//! declared in order of first appearance. Without a tag, `X -> 2X` lines are
//! tagged `duplication`, everything else `other`. Any other text after `#` is
//! a comment.

use std::fmt::Write as _;

use thiserror::Error;

use super::{
    is_valid_species_name, CrnError, Network, Reaction, ReactionTag, SpeciesId, StoichVector,
};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

fn parse_side(
    text: &str,
    line: usize,
    builder: &mut super::NetworkBuilder,
) -> Result<StoichVector, ParseError> {
    let text = text.trim();
    if text.is_empty() || text == "0" || text == "∅" {
        return Ok(StoichVector::new());
    }
    let mut pairs: Vec<(SpeciesId, u32)> = Vec::new();
    for term in text.split('+') {
        let term = term.trim();
        if term.is_empty() {
            return Err(err(line, "empty term"));
        }
        let digits = term.chars().take_while(|c| c.is_ascii_digit()).count();
        let (coef, name) = term.split_at(digits);
        let name = name.trim_start_matches('*').trim();
        let coef: u32 = if coef.is_empty() {
            1
        } else {
            coef.parse()
                .map_err(|_| err(line, format!("bad coefficient in `{term}`")))?
        };
        if !is_valid_species_name(name) {
            return Err(err(line, format!("bad species name `{name}`")));
        }
        let id = builder
            .species(name)
            .map_err(|e| err(line, e.to_string()))?;
        pairs.push((id, coef));
    }
    Ok(StoichVector::from_pairs(pairs))
}

/// Parses a reaction file into a network.
pub fn parse_network(source: &str) -> Result<Network, ParseError> {
    let mut builder = Network::builder();
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let (body, trailer) = match raw.split_once('#') {
            Some((b, t)) => (b.trim(), Some(t.trim())),
            None => (raw.trim(), None),
        };
        if body.is_empty() {
            continue;
        }
        if let Some(rest) = body.strip_prefix("volume") {
            if rest.starts_with(char::is_whitespace) {
                let v: f64 = rest.trim().parse().map_err(|_| err(line, "bad volume"))?;
                builder.volume(v);
                continue;
            }
        }
        let (lhs, rhs) = body
            .split_once("->")
            .ok_or_else(|| err(line, "expected `->`"))?;
        let (rhs, rate) = rhs
            .split_once('@')
            .ok_or_else(|| err(line, "expected `@ rate`"))?;
        let rate: f64 = rate
            .trim()
            .parse()
            .map_err(|_| err(line, format!("bad rate `{}`", rate.trim())))?;
        let reactants = parse_side(lhs, line, &mut builder)?;
        let products = parse_side(rhs, line, &mut builder)?;
        let mut reaction = Reaction::new(reactants, products, rate, ReactionTag::Other);
        reaction.tag = match trailer.and_then(ReactionTag::parse) {
            Some(t) => t,
            None if reaction.duplicated_species().is_some() => ReactionTag::Duplication,
            None => ReactionTag::Other,
        };
        builder
            .add_reaction(reaction)
            .map_err(|e| err(line, e.to_string()))?;
    }
    builder.build().map_err(|e: CrnError| err(0, e.to_string()))
}

fn format_side(network: &Network, side: &StoichVector) -> String {
    if side.is_empty() {
        return "0".to_string();
    }
    side.iter()
        .map(|(s, n)| {
            let name = network.species_name(s);
            if n == 1 {
                name.to_string()
            } else {
                format!("{n}{name}")
            }
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Writes a network in the reaction file format. Species appear in
/// declaration order through a leading comment so that re-parsing keeps ids.
pub fn format_network(network: &Network) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# species: {}", network.species_names().join(" "));
    if network.volume() != 1.0 {
        let _ = writeln!(out, "volume {:?}", network.volume());
    }
    for r in network.reactions() {
        let _ = writeln!(
            out,
            "{} -> {} @ {:?} # {}",
            format_side(network, &r.reactants),
            format_side(network, &r.products),
            r.rate,
            r.tag
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ab() {
        let net = parse_network("A -> 2A @ 1\nB -> 2 B @ 1\nA + B -> 0 @ 0.5 # death\n").unwrap();
        assert_eq!(net.species_names(), ["A", "B"]);
        assert_eq!(net.reactions().len(), 3);
        assert_eq!(net.reactions()[0].tag, ReactionTag::Duplication);
        assert_eq!(net.reactions()[1].duplicated_species(), Some(SpeciesId(1)));
        assert_eq!(net.reactions()[2].tag, ReactionTag::Death);
        assert!(net.reactions()[2].products.is_empty());
        assert_eq!(net.reactions()[2].rate, 0.5);
    }

    #[test]
    fn empty_side_and_comments() {
        let src = "# header\n\nvolume 2\n -> X @ 3 # a free-text comment\nX -> @ 1\n";
        let net = parse_network(src).unwrap();
        assert_eq!(net.volume(), 2.0);
        assert!(net.reactions()[0].reactants.is_empty());
        assert_eq!(net.reactions()[0].tag, ReactionTag::Other);
        assert!(net.reactions()[1].products.is_empty());
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse_network("A -> 2A @ 1\nA + -> B @ 1\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse_network("A -> B\n").is_err());
        assert!(parse_network("A -> B @ fast\n").is_err());
        assert!(parse_network("A => B @ 1\n").is_err());
        assert!(parse_network("A -> B @ -1\n").is_err());
        assert!(parse_network("0 -> 0 @ 1\n").is_err());
    }

    #[test]
    fn format_then_parse_is_identity() {
        let src = "A1 + B0 -> A1 + Y0 @ 1e-11 # conjugation\nA -> 2A @ 0.016\nX + X -> X @ 2\n";
        let net = parse_network(src).unwrap();
        let again = parse_network(&format_network(&net)).unwrap();
        assert_eq!(net, again);
    }
}
