//! Wall-clock stage timing. Without `std` every reading is zero.

#[cfg(feature = "std")]
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch(std::time::Instant);

#[cfg(feature = "std")]
impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch(std::time::Instant::now())
    }

    pub fn elapsed_secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[cfg(not(feature = "std"))]
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch;

#[cfg(not(feature = "std"))]
impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch
    }

    pub fn elapsed_secs(&self) -> f64 {
        0.0
    }
}
