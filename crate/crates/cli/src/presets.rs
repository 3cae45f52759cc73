//! Built-in experiment presets. Desk-scale presets shrink the signal length
//! tenfold while preserving the measurement rate, sparsity, SNR, and node
//! count; finite-size fluctuations show up in the stderr columns.

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub toml: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig1",
        summary: "optimal coding-rate sequence by DP (rho 0.2, kappa 1, P 100, b 0.782, 0.005 dB)",
        toml: r#"algorithm = "dp-plan"
output_stem = "fig1"

[problem]
kappa = 1.0
rho = 0.2
noise_var = 0.01
p = 100
seed = 1

[run]
b = 0.782
target_emse_db = 0.005
rd_model = "ecsq"
"#,
    },
    Preset {
        name: "fig2-desk",
        summary: "C-MP-AMP vs SE, desk scale (P 3, N 3000, M 900, 15 dB, 50 trials)",
        toml: r#"algorithm = "col"
output_stem = "fig2_desk"

[problem]
n = 3000
m = 900
rho = 0.1
snr_db = 15.0
p = 3
seed = 2
trials = 50

[run]
schedule = [1, 2, 3, 4]
"#,
    },
    Preset {
        name: "fig3-desk",
        summary: "C-MP-AMP final MSE vs MMSE over kappa and SNR, desk scale (P 3, N 3000)",
        toml: r#"algorithm = "col"
output_stem = "fig3_desk"

[problem]
n = 3000
rho = 0.1
p = 3
seed = 3
trials = 10

[run]
kappa_sweep = [0.2, 0.3, 0.4, 0.5]
snr_db_sweep = [10.0, 15.0]
"#,
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
