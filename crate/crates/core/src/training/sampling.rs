use ndarray::{Array2, Array3, Axis};
use rand::Rng;

use crate::error::{Error, Result};

/// A fixed-length crop from a uniformly chosen utterance at a uniformly
/// chosen offset. Utterances shorter than `crop_frames` are read circularly.
/// `corpus` holds normalized `T × D` matrices; the crop is `crop_frames × D`.
pub fn sample_crop<R: Rng>(corpus: &[Array2<f64>], crop_frames: usize, rng: &mut R) -> Result<Array2<f64>> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("cannot sample crops from an empty corpus".into()));
    }
    let utt = &corpus[rng.random_range(0..corpus.len())];
    let t = utt.nrows();
    if t == 0 {
        return Err(Error::InvalidInput("corpus contains an empty utterance".into()));
    }
    if t >= crop_frames {
        let start = rng.random_range(0..=t - crop_frames);
        Ok(utt.slice(ndarray::s![start..start + crop_frames, ..]).to_owned())
    } else {
        let start = rng.random_range(0..t);
        let idx: Vec<usize> = (0..crop_frames).map(|i| (start + i) % t).collect();
        Ok(utt.select(Axis(0), &idx))
    }
}

/// `batch` crops stacked as a `(batch, D, crop_frames)` network input.
pub fn sample_batch<R: Rng>(
    corpus: &[Array2<f64>],
    crop_frames: usize,
    batch: usize,
    rng: &mut R,
) -> Result<Array3<f64>> {
    let dim = corpus
        .first()
        .map(|u| u.ncols())
        .ok_or_else(|| Error::InvalidInput("cannot sample crops from an empty corpus".into()))?;
    let mut out = Array3::<f64>::zeros((batch, dim, crop_frames));
    for mut slot in out.outer_iter_mut() {
        let crop = sample_crop(corpus, crop_frames, rng)?;
        slot.assign(&crop.t());
    }
    Ok(out)
}
