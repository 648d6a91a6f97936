use std::fmt::Write;

use super::AnyMap;
use crate::model::{InfluenceArc, Provenance, Sign, Valence};

/// Node decoration, chosen from what the node is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DotStyle {
    Plain,
    Negated,
    Merged,
    Split,
}

impl DotStyle {
    fn attrs(self) -> &'static str {
        match self {
            DotStyle::Plain => r#"shape=box, style="rounded""#,
            DotStyle::Negated => r#"shape=box, style="rounded,dashed""#,
            DotStyle::Merged => r#"shape=hexagon, style="filled", fillcolor="lightblue""#,
            DotStyle::Split => r#"shape=box, style="rounded,filled", fillcolor="lightyellow""#,
        }
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

struct Builder {
    out: String,
}

impl Builder {
    fn new(name: &str, rankdir: &str) -> Self {
        let mut out = String::new();
        writeln!(out, "digraph {} {{", quote(name)).unwrap();
        writeln!(out, "  rankdir={rankdir};").unwrap();
        writeln!(out, "  node [fontname=\"Helvetica\"];").unwrap();
        Builder { out }
    }

    fn node(&mut self, id: &str, label: &str, style: DotStyle, fundamental: bool) {
        let extra = if fundamental { ", peripheries=2" } else { "" };
        writeln!(
            self.out,
            "  {} [label={}, {}{}];",
            quote(id),
            quote(label),
            style.attrs(),
            extra
        )
        .unwrap();
    }

    fn arc(&mut self, from: &str, to: &str, sign: Option<Sign>) {
        let attrs = match sign {
            Some(Sign::Negative) => r#" [label="-", style=dashed, color=red]"#,
            Some(Sign::Positive) => r#" [label="+"]"#,
            None => "",
        };
        writeln!(self.out, "  {} -> {}{};", quote(from), quote(to), attrs).unwrap();
    }

    fn finish(mut self) -> String {
        self.out.push_str("}\n");
        self.out
    }
}

fn influence(b: &mut Builder, arcs: &[InfluenceArc]) {
    let mut arcs: Vec<&InfluenceArc> = arcs.iter().collect();
    arcs.sort_by(|a, c| (&a.from, &a.to).cmp(&(&c.from, &c.to)));
    for a in arcs {
        b.arc(a.from.as_str(), a.to.as_str(), Some(a.sign));
    }
}

/// Graphviz rendering. Influence maps point towards the fundamental value;
/// ends-means maps and trees point from ends to means.
pub fn to_dot(map: &AnyMap) -> String {
    match map {
        AnyMap::Cognitive(cm) => {
            let mut b = Builder::new("cognitive_map", "BT");
            let mut nodes: Vec<_> = cm.nodes().iter().collect();
            nodes.sort_by(|a, c| a.id.cmp(&c.id));
            for n in nodes {
                b.node(n.id.as_str(), &n.label, DotStyle::Plain, false);
            }
            influence(&mut b, cm.arcs());
            b.finish()
        }
        AnyMap::Value(vcm) => {
            let mut b = Builder::new("value_cognitive_map", "BT");
            let mut nodes: Vec<_> = vcm.nodes().iter().collect();
            nodes.sort_by(|a, c| a.id.cmp(&c.id));
            for n in nodes {
                b.node(
                    n.id.as_str(),
                    &n.label,
                    DotStyle::Plain,
                    &n.id == vcm.fundamental(),
                );
            }
            influence(&mut b, vcm.arcs());
            b.finish()
        }
        AnyMap::EndsMeans(emm) => {
            let mut b = Builder::new("ends_means_map", "TB");
            for l in emm.literals() {
                let style = match l.valence() {
                    Valence::Affirmed => DotStyle::Plain,
                    Valence::Negated => DotStyle::Negated,
                };
                b.node(&l.id(), &l.label, style, &l.key == emm.fundamental());
            }
            for (e, m) in emm.arcs() {
                b.arc(&e.id(), &m.id(), None);
            }
            b.finish()
        }
        AnyMap::Tree(tree) => {
            let mut b = Builder::new("value_tree", "TB");
            for n in tree.nodes() {
                let style = match &n.provenance {
                    Provenance::Merged { .. } => DotStyle::Merged,
                    Provenance::Split { .. } => DotStyle::Split,
                    Provenance::Original(l) if l.valence() == Valence::Negated => {
                        DotStyle::Negated
                    }
                    Provenance::Original(_) => DotStyle::Plain,
                };
                b.node(&n.id, &n.label, style, n.id == tree.root());
            }
            for (p, c) in tree.arcs() {
                b.arc(p, c, None);
            }
            b.finish()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CognitiveMap, Node};

    #[test]
    fn quoting_escapes() {
        assert_eq!(quote(r#"a "b" \c"#), r#""a \"b\" \\c""#);
    }

    #[test]
    fn negative_arcs_are_dashed_red() {
        let cm = CognitiveMap::new(
            vec![Node::new("a", "A"), Node::new("b", "B")],
            vec![InfluenceArc::negative("a", "b")],
        );
        let dot = to_dot(&AnyMap::Cognitive(cm));
        assert!(dot.contains(r#""a" -> "b" [label="-", style=dashed, color=red];"#));
    }
}
