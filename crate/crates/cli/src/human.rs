//! Human-readable output helpers.

/// Integers above this are abbreviated in human output.
pub const INLINE_LIMIT: u64 = 1_000_000_000_000;

const KEPT_DIGITS: usize = 6;

/// Rewrites every decimal digit run above [`INLINE_LIMIT`] as its leading
/// digits and total length, e.g. `123456…(25 digits)`.
pub fn abbreviate_numbers(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut run = String::new();
    let flush = |run: &mut String, out: &mut String| {
        if exceeds_limit(run) {
            out.push_str(&run[..KEPT_DIGITS]);
            out.push_str(&format!("…({} digits)", run.len()));
        } else {
            out.push_str(run);
        }
        run.clear();
    };
    for c in text.chars() {
        if c.is_ascii_digit() {
            run.push(c);
        } else {
            flush(&mut run, &mut out);
            out.push(c);
        }
    }
    flush(&mut run, &mut out);
    out
}

fn exceeds_limit(digits: &str) -> bool {
    let trimmed = digits.trim_start_matches('0');
    match trimmed.len().cmp(&13) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => trimmed.parse::<u64>().map_or(true, |v| v > INLINE_LIMIT),
    }
}
