//! Figure-reproduction presets shipped with the binary.

pub const NAMES: [&str; 9] = [
    "fig1",
    "fig1-spectra",
    "fig2-left",
    "fig2-right",
    "fig3",
    "fig4-left",
    "fig4-right",
    "fig5-left",
    "fig5-right",
];

const TEXTS: [&str; 9] = [
    include_str!("../presets/fig1.cfg"),
    include_str!("../presets/fig1-spectra.cfg"),
    include_str!("../presets/fig2-left.cfg"),
    include_str!("../presets/fig2-right.cfg"),
    include_str!("../presets/fig3.cfg"),
    include_str!("../presets/fig4-left.cfg"),
    include_str!("../presets/fig4-right.cfg"),
    include_str!("../presets/fig5-left.cfg"),
    include_str!("../presets/fig5-right.cfg"),
];

/// Flat key-value text of a preset.
pub fn get(name: &str) -> Option<&'static str> {
    NAMES.iter().position(|n| *n == name).map(|i| TEXTS[i])
}
