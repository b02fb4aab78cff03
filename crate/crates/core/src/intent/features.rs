/// Number of hashed feature buckets.
pub const FEATURE_DIM: usize = 1024;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(parts: &[&str]) -> u64 {
    let mut h = FNV_OFFSET;
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            h ^= u64::from(b' ');
            h = h.wrapping_mul(FNV_PRIME);
        }
        for b in p.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// Signed hashed bag of word unigrams and bigrams. The low bits of the
/// FNV-1a hash pick the bucket, the top bit the sign.
pub fn featurize_text(text: &str) -> Vec<f64> {
    let words = super::parse::normalize(text);
    let mut x = vec![0.0; FEATURE_DIM];
    let mut add = |parts: &[&str]| {
        let h = fnv1a(parts);
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        x[(h % FEATURE_DIM as u64) as usize] += sign;
    };
    for (i, w) in words.iter().enumerate() {
        add(&[w]);
        if let Some(next) = words.get(i + 1) {
            add(&[w, next]);
        }
    }
    x
}
