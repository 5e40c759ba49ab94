use crate::corpus::Sentence;
use crate::error::{Error, Result};

/// Recall weight of the LCS F-measure.
pub const ROUGE_L_BETA: f64 = 1.2;

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Sentence-level ROUGE-L:
/// `F = (1 + b^2) P R / (R + b^2 P)` with `P = lcs/|h|`, `R = lcs/|r|`,
/// `b = ROUGE_L_BETA`. Empty input is an error; callers that need a number
/// use 0.
pub fn rouge_l(hyp: &Sentence, reference: &Sentence) -> Result<f64> {
    if hyp.is_empty() || reference.is_empty() {
        return Err(Error::EmptySentence);
    }
    let lcs = lcs_len(hyp.tokens(), reference.tokens()) as f64;
    if lcs == 0.0 {
        return Ok(0.0);
    }
    let p = lcs / hyp.len() as f64;
    let r = lcs / reference.len() as f64;
    let b2 = ROUGE_L_BETA * ROUGE_L_BETA;
    Ok((1.0 + b2) * p * r / (r + b2 * p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn examples() {
        let a = Sentence::new("a b c d");
        assert_abs_diff_eq!(rouge_l(&a, &a).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(rouge_l(&a, &Sentence::new("w x y z")).unwrap(), 0.0);
        assert!(rouge_l(&Sentence::new(""), &a).is_err());
    }
}
