//! Independent reference values and property suites used by the acceptance
//! harness of `levyheat`.
//!
//! Nothing in [`oracles`] calls into `levyheat`: every reference value is
//! recomputed here from closed forms or from plain composite quadrature.

pub mod oracles;
pub mod properties;

/// One line of the acceptance report.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub id: u32,
    pub title: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(id: u32, title: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Verdict { id, title: title.into(), pass, detail: detail.into() }
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {} [{}] {}: {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.detail
        )
    }
}
