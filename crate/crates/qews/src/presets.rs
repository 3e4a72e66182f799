//! Figure presets, compiled in from `presets/*.json`.

const PRESETS: &[(&str, &str)] = &[
    ("fig3-unmodulated", include_str!("../presets/fig3-unmodulated.json")),
    ("fig3-energy", include_str!("../presets/fig3-energy.json")),
    ("fig3-density", include_str!("../presets/fig3-density.json")),
    ("fig4", include_str!("../presets/fig4.json")),
    ("fig5a", include_str!("../presets/fig5a.json")),
    ("fig5b", include_str!("../presets/fig5b.json")),
    ("fig5c", include_str!("../presets/fig5c.json")),
    ("fig5d", include_str!("../presets/fig5d.json")),
    ("fig5e", include_str!("../presets/fig5e.json")),
    ("fig5f", include_str!("../presets/fig5f.json")),
    ("fig5g", include_str!("../presets/fig5g.json")),
    ("fig5h", include_str!("../presets/fig5h.json")),
    ("fig5i", include_str!("../presets/fig5i.json")),
    ("fig6", include_str!("../presets/fig6.json")),
    ("figS2", include_str!("../presets/figS2.json")),
    ("figS5", include_str!("../presets/figS5.json")),
    ("classical-microring", include_str!("../presets/classical-microring.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
