//! Monolingual token alignment with exact and stem matchers.
//!
//! Two tokens may align when they are identical (an exact match) or share a
//! Porter stem (a stem match). Among all one-to-one alignments the canonical
//! one maximizes, in lexicographic order:
//!
//! 1. the number of aligned pairs,
//! 2. the number of exact matches,
//! 3. the negated number of crossing pairs,
//!
//! and among alignments equal on all three, the pair list (sorted by
//! hypothesis index) that is lexicographically smallest — i.e. earlier
//! hypothesis tokens match the earliest feasible reference tokens.
//!
//! The search is a depth-first branch-and-bound that explores hypothesis
//! positions left to right, trying reference candidates in ascending order
//! before leaving a token unmatched, so the first optimum found is the
//! canonical one. Inputs seen in practice (short summaries) complete
//! exactly; a node budget caps pathological inputs, falling back to the
//! best alignment found, METEOR-style.

use super::stem::stem;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchKind {
    Exact,
    Stem,
}

/// One aligned token pair: indices into the hypothesis and reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignedPair {
    pub hyp: usize,
    pub reference: usize,
    pub kind: MatchKind,
}

/// A one-to-one alignment; pairs are sorted by hypothesis index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alignment {
    pub pairs: Vec<AlignedPair>,
}

impl Alignment {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

const NODE_BUDGET: usize = 2_000_000;

struct Search<'a> {
    /// stem-class id per token
    hyp_class: &'a [u32],
    ref_class: &'a [u32],
    /// surface-form id per token (for the exact-match bound)
    hyp_surface: &'a [u32],
    ref_surface: &'a [u32],
    /// per hyp position, candidate ref indices in ascending order
    candidates: &'a [Vec<usize>],
    /// remaining unmatched ref tokens per class / surface id
    ref_class_left: Vec<u32>,
    ref_surface_left: Vec<u32>,
    /// per position: how many later hyp tokens (inclusive) sit in each class
    hyp_class_suffix: Vec<HashMap<u32, u32>>,
    hyp_surface_suffix: Vec<HashMap<u32, u32>>,
    ref_used: Vec<bool>,
    stack: Vec<AlignedPair>,
    matches: usize,
    exact: usize,
    crossings: usize,
    nodes: usize,
    best: Option<(usize, usize, isize, Vec<AlignedPair>)>,
}

impl Search<'_> {
    fn remaining_bound(&self, pos: usize) -> (usize, usize) {
        let mut extra_matches = 0;
        for (class, count) in &self.hyp_class_suffix[pos] {
            extra_matches += (*count).min(self.ref_class_left[*class as usize]) as usize;
        }
        let mut extra_exact = 0;
        for (surface, count) in &self.hyp_surface_suffix[pos] {
            extra_exact += (*count).min(self.ref_surface_left[*surface as usize]) as usize;
        }
        (extra_matches, extra_exact)
    }

    fn run(&mut self, pos: usize) {
        if self.nodes >= NODE_BUDGET {
            return;
        }
        self.nodes += 1;
        if pos == self.hyp_class.len() {
            let score = (self.matches, self.exact, -(self.crossings as isize));
            let better = match &self.best {
                None => true,
                Some((m, e, c, _)) => score > (*m, *e, *c),
            };
            if better {
                self.best = Some((score.0, score.1, score.2, self.stack.clone()));
            }
            return;
        }
        // prune: even with every remaining token matched optimally this
        // branch cannot strictly beat the incumbent (ties keep the first,
        // i.e. lexicographically smallest, solution)
        if let Some((bm, be, bc, _)) = &self.best {
            let (extra_m, extra_e) = self.remaining_bound(pos);
            let optimistic = (
                self.matches + extra_m,
                self.exact + extra_e,
                -(self.crossings as isize),
            );
            if optimistic <= (*bm, *be, *bc) {
                return;
            }
        }
        for ci in 0..self.candidates[pos].len() {
            let j = self.candidates[pos][ci];
            if self.ref_used[j] {
                continue;
            }
            let kind = if self.hyp_surface[pos] == self.ref_surface[j] {
                MatchKind::Exact
            } else {
                MatchKind::Stem
            };
            let crossing_delta = self
                .stack
                .iter()
                .filter(|p| p.reference > j)
                .count();

            self.ref_used[j] = true;
            self.ref_class_left[self.ref_class[j] as usize] -= 1;
            self.ref_surface_left[self.ref_surface[j] as usize] -= 1;
            self.stack.push(AlignedPair {
                hyp: pos,
                reference: j,
                kind,
            });
            self.matches += 1;
            if kind == MatchKind::Exact {
                self.exact += 1;
            }
            self.crossings += crossing_delta;

            self.run(pos + 1);

            self.crossings -= crossing_delta;
            if kind == MatchKind::Exact {
                self.exact -= 1;
            }
            self.matches -= 1;
            self.stack.pop();
            self.ref_surface_left[self.ref_surface[j] as usize] += 1;
            self.ref_class_left[self.ref_class[j] as usize] += 1;
            self.ref_used[j] = false;
        }
        // leave this hypothesis token unmatched
        self.run(pos + 1);
    }
}

/// Canonical alignment between a hypothesis and a reference.
pub fn align(hyp: &[String], reference: &[String]) -> Alignment {
    if hyp.is_empty() || reference.is_empty() {
        return Alignment::default();
    }
    let mut class_ids: HashMap<String, u32> = HashMap::new();
    let mut hyp_class = Vec::with_capacity(hyp.len());
    let mut ref_class = Vec::with_capacity(reference.len());
    for (words, out) in [(hyp, &mut hyp_class), (reference, &mut ref_class)] {
        for w in words {
            let s = stem(w);
            let next = class_ids.len() as u32;
            out.push(*class_ids.entry(s).or_insert(next));
        }
    }
    let n_classes = class_ids.len();

    let mut surface_ids: HashMap<&str, u32> = HashMap::new();
    let mut hyp_surface = Vec::with_capacity(hyp.len());
    let mut ref_surface = Vec::with_capacity(reference.len());
    for (words, out) in [(hyp, &mut hyp_surface), (reference, &mut ref_surface)] {
        for w in words {
            let next = surface_ids.len() as u32;
            out.push(*surface_ids.entry(w.as_str()).or_insert(next));
        }
    }
    let n_surfaces = surface_ids.len();

    let mut ref_class_left = vec![0u32; n_classes];
    let mut ref_surface_left = vec![0u32; n_surfaces];
    for (&c, &s) in ref_class.iter().zip(&ref_surface) {
        ref_class_left[c as usize] += 1;
        ref_surface_left[s as usize] += 1;
    }

    let candidates: Vec<Vec<usize>> = hyp_class
        .iter()
        .map(|hc| {
            ref_class
                .iter()
                .enumerate()
                .filter(|(_, rc)| *rc == hc)
                .map(|(j, _)| j)
                .collect()
        })
        .collect();

    // suffix counts for the branch-and-bound upper bounds
    let n = hyp.len();
    let mut hyp_class_suffix = vec![HashMap::new(); n + 1];
    let mut hyp_surface_suffix = vec![HashMap::new(); n + 1];
    for i in (0..n).rev() {
        let mut cmap = hyp_class_suffix[i + 1].clone();
        *cmap.entry(hyp_class[i]).or_insert(0u32) += 1;
        hyp_class_suffix[i] = cmap;
        let mut smap = hyp_surface_suffix[i + 1].clone();
        *smap.entry(hyp_surface[i]).or_insert(0u32) += 1;
        hyp_surface_suffix[i] = smap;
    }

    let mut search = Search {
        hyp_class: &hyp_class,
        ref_class: &ref_class,
        hyp_surface: &hyp_surface,
        ref_surface: &ref_surface,
        candidates: &candidates,
        ref_class_left,
        ref_surface_left,
        hyp_class_suffix,
        hyp_surface_suffix,
        ref_used: vec![false; reference.len()],
        stack: Vec::new(),
        matches: 0,
        exact: 0,
        crossings: 0,
        nodes: 0,
        best: None,
    };
    search.run(0);
    Alignment {
        pairs: search.best.map(|(_, _, _, pairs)| pairs).unwrap_or_default(),
    }
}
