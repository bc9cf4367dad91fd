use serde::{Deserialize, Serialize};

use super::AsrError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EditKind {
    Match,
    Sub,
    Del,
    Ins,
}

/// One step of an alignment between a reference and a hypothesis sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditOp {
    pub kind: EditKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyp_index: Option<usize>,
}

impl EditOp {
    pub fn matched(r: usize, h: usize) -> Self {
        Self { kind: EditKind::Match, ref_index: Some(r), hyp_index: Some(h) }
    }

    pub fn sub(r: usize, h: usize) -> Self {
        Self { kind: EditKind::Sub, ref_index: Some(r), hyp_index: Some(h) }
    }

    pub fn del(r: usize) -> Self {
        Self { kind: EditKind::Del, ref_index: Some(r), hyp_index: None }
    }

    pub fn ins(h: usize) -> Self {
        Self { kind: EditKind::Ins, ref_index: None, hyp_index: Some(h) }
    }

    /// MATCH/SUB carry both indices, DEL only the reference, INS only the hypothesis.
    pub fn is_well_formed(&self) -> bool {
        match self.kind {
            EditKind::Match | EditKind::Sub => self.ref_index.is_some() && self.hyp_index.is_some(),
            EditKind::Del => self.ref_index.is_some() && self.hyp_index.is_none(),
            EditKind::Ins => self.ref_index.is_none() && self.hyp_index.is_some(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.kind != EditKind::Match
    }
}

/// Minimum unit-cost edit distance plus one optimal script.
///
/// The backtrace prefers MATCH, then SUB, then DEL, then INS, so ties resolve
/// the same way on every run.
pub fn levenshtein_align<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> (usize, Vec<EditOp>) {
    let n = reference.len();
    let m = hypothesis.len();
    let w = m + 1;
    let mut dp = vec![0usize; (n + 1) * w];
    for j in 0..=m {
        dp[j] = j;
    }
    for i in 1..=n {
        dp[i * w] = i;
        for j in 1..=m {
            let cost = usize::from(reference[i - 1] != hypothesis[j - 1]);
            let diag = dp[(i - 1) * w + j - 1] + cost;
            let up = dp[(i - 1) * w + j] + 1;
            let left = dp[i * w + j - 1] + 1;
            dp[i * w + j] = diag.min(up).min(left);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = dp[i * w + j];
        if i > 0 && j > 0 {
            let diag = dp[(i - 1) * w + j - 1];
            let same = reference[i - 1] == hypothesis[j - 1];
            if same && diag == here {
                ops.push(EditOp::matched(i - 1, j - 1));
                i -= 1;
                j -= 1;
                continue;
            }
            if !same && diag + 1 == here {
                ops.push(EditOp::sub(i - 1, j - 1));
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && dp[(i - 1) * w + j] + 1 == here {
            ops.push(EditOp::del(i - 1));
            i -= 1;
        } else {
            ops.push(EditOp::ins(j - 1));
            j -= 1;
        }
    }
    ops.reverse();
    (dp[n * w + m], ops)
}

/// Word error rate: edit distance over reference length.
pub fn wer<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> Result<f64, AsrError> {
    if reference.is_empty() {
        return Err(AsrError::EmptyReference);
    }
    let (d, _) = levenshtein_align(reference, hypothesis);
    Ok(d as f64 / reference.len() as f64)
}

/// Applies `ops` to `reference`, taking substituted and inserted items from
/// `hypothesis`. Returns `None` when the script is inconsistent with either side.
pub fn replay<T: PartialEq + Clone>(ops: &[EditOp], reference: &[T], hypothesis: &[T]) -> Option<Vec<T>> {
    let mut out = Vec::with_capacity(hypothesis.len());
    let mut next_ref = 0;
    for op in ops {
        if !op.is_well_formed() {
            return None;
        }
        if let Some(r) = op.ref_index {
            if r != next_ref || r >= reference.len() {
                return None;
            }
            next_ref += 1;
        }
        match op.kind {
            EditKind::Match => {
                let r = op.ref_index?;
                if reference[r] != *hypothesis.get(op.hyp_index?)? {
                    return None;
                }
                out.push(reference[r].clone());
            }
            EditKind::Sub | EditKind::Ins => {
                let h = op.hyp_index?;
                if h != out.len() {
                    return None;
                }
                out.push(hypothesis.get(h)?.clone());
            }
            EditKind::Del => {}
        }
    }
    (next_ref == reference.len()).then_some(out)
}
