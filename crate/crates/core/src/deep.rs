// Recursive walks over terms can go as deep as the term; benchmark inputs
// nest hundreds of thousands of applications along one spine.

const RED_ZONE: usize = 128 * 1024;
const SEGMENT: usize = 8 * 1024 * 1024;

#[inline]
pub(crate) fn guard<R>(f: impl FnOnce() -> R) -> R {
    stacker::maybe_grow(RED_ZONE, SEGMENT, f)
}
