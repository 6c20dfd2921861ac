//! Histogram-based information measures on 8-bit quantized intensities.

use super::image::GrayImage;
use crate::error::Result;

const LEVELS: usize = 256;

fn histogram(levels: &[u8]) -> [u64; LEVELS] {
    let mut h = [0u64; LEVELS];
    for &l in levels {
        h[l as usize] += 1;
    }
    h
}

fn entropy_of_counts(counts: &[u64], total: u64) -> f64 {
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Shannon entropy in bits of the 256-bin intensity histogram.
pub fn entropy(img: &GrayImage) -> f64 {
    let levels = img.levels();
    entropy_of_counts(&histogram(&levels), levels.len() as u64)
}

/// `I(A; B)` in bits from the 256x256 joint histogram.
pub fn mutual_information_pair(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.same_dims(b, "mutual information")?;
    let (la, lb) = (a.levels(), b.levels());
    let n = la.len() as u64;
    let mut joint = vec![0u64; LEVELS * LEVELS];
    for (&x, &y) in la.iter().zip(&lb) {
        joint[x as usize * LEVELS + y as usize] += 1;
    }
    // I(A;B) = H(A) + H(B) - H(A,B)
    let ha = entropy_of_counts(&histogram(&la), n);
    let hb = entropy_of_counts(&histogram(&lb), n);
    let hab = entropy_of_counts(&joint, n);
    Ok((ha + hb - hab).max(0.0))
}

/// Fusion mutual information `I(F; V) + I(F; I)`.
pub fn mutual_information(f: &GrayImage, v: &GrayImage, i: &GrayImage) -> Result<f64> {
    Ok(mutual_information_pair(f, v)? + mutual_information_pair(f, i)?)
}
