use unicode_normalization::UnicodeNormalization;

/// Signed feature hashing over words and character trigrams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashedEmbedder {
    dim: usize,
    seed: u64,
}

const WORD_WEIGHT: f64 = 1.0;
const TRIGRAM_WEIGHT: f64 = 0.5;

impl HashedEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashedEmbedder { dim, seed }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn slot(&self, namespace: u8, feature: &str) -> (usize, f64) {
        let h = mix(fnv1a(self.seed, namespace, feature.as_bytes()));
        let sign = if h & 1 == 0 { 1.0 } else { -1.0 };
        (((h >> 1) % self.dim as u64) as usize, sign)
    }

    /// Unit-norm vector for non-blank text, zero vector otherwise.
    pub fn embed(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        let words = tokenize(text);
        if words.is_empty() {
            return v;
        }
        for w in &words {
            let (i, s) = self.slot(b'w', w);
            v[i] += s * WORD_WEIGHT;
            let padded: Vec<char> = std::iter::once('<')
                .chain(w.chars())
                .chain(std::iter::once('>'))
                .collect();
            for tri in padded.windows(3) {
                let tri: String = tri.iter().collect();
                let (i, s) = self.slot(b'c', &tri);
                v[i] += s * TRIGRAM_WEIGHT;
            }
        }
        let mut norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            // every feature cancelled against another
            let (i, s) = self.slot(b'w', &words[0]);
            v[i] = s;
            norm = 1.0;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        v
    }
}

/// Lowercased alphanumeric runs; falls back to whitespace-separated pieces
/// for text made only of symbols.
fn tokenize(text: &str) -> Vec<String> {
    let lower: String = text.nfc().collect::<String>().to_lowercase();
    let words: Vec<String> = lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect();
    if !words.is_empty() {
        return words;
    }
    lower.split_whitespace().map(str::to_string).collect()
}

fn fnv1a(seed: u64, namespace: u8, bytes: &[u8]) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(&[namespace]).chain(bytes) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

// splitmix64 finalizer; FNV alone has weak low bits
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
