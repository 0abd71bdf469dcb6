use rand::Rng as _;

use crate::rng::seeded;

/// Default swap count for a field of `len` tokens: `⌈0.1·len⌉`, at least one.
pub fn default_swaps(len: usize) -> usize {
    super::touch_count(0.1, len)
}

/// Applies `min(n_swaps, ⌊len/2⌋)` adjacent transpositions at seeded random
/// positions. Tokens are whitespace-delimited.
pub fn random_swap(text: &str, n_swaps: usize, seed: u64) -> String {
    let mut tokens: Vec<&str> = text.split_whitespace().collect();
    let n = n_swaps.min(tokens.len() / 2);
    if n == 0 {
        return text.to_string();
    }
    let mut rng = seeded(seed);
    for _ in 0..n {
        let i = rng.random_range(0..tokens.len() - 1);
        tokens.swap(i, i + 1);
    }
    tokens.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sorted(s: &str) -> Vec<&str> {
        let mut v: Vec<&str> = s.split_whitespace().collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn single_token_unchanged() {
        assert_eq!(random_swap("beer", 5, 1), "beer");
        assert_eq!(random_swap("", 5, 1), "");
    }

    #[test]
    fn two_tokens_always_swap() {
        assert_eq!(random_swap("may be", 3, 9), "be may");
    }

    #[test]
    fn deterministic() {
        let s = "certain stella artois brand beer may be unsafe due to possible presence";
        assert_eq!(random_swap(s, 2, 42), random_swap(s, 2, 42));
    }

    proptest! {
        #[test]
        fn preserves_multiset(s in "[a-e]{1,3}( [a-e]{1,3}){0,15}", n in 0usize..6, seed in any::<u64>()) {
            let out = random_swap(&s, n, seed);
            prop_assert_eq!(sorted(&out), sorted(&s));
        }
    }
}
