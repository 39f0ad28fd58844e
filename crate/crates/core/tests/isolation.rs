//! The attacker and profiler only use the unprivileged view.

const SOURCES: &[(&str, &str)] = &[
    ("attacker/mod.rs", include_str!("../src/attacker/mod.rs")),
    ("attacker/decode.rs", include_str!("../src/attacker/decode.rs")),
    ("attacker/placement.rs", include_str!("../src/attacker/placement.rs")),
    ("attacker/probe.rs", include_str!("../src/attacker/probe.rs")),
    ("attacker/reclaim.rs", include_str!("../src/attacker/reclaim.rs")),
    ("attacker/recover.rs", include_str!("../src/attacker/recover.rs")),
    ("profiler/mod.rs", include_str!("../src/profiler/mod.rs")),
    ("profiler/classify.rs", include_str!("../src/profiler/classify.rs")),
    ("profiler/convergence.rs", include_str!("../src/profiler/convergence.rs")),
    ("profiler/discovery.rs", include_str!("../src/profiler/discovery.rs")),
    ("profiler/profile.rs", include_str!("../src/profiler/profile.rs")),
    ("profiler/resident.rs", include_str!("../src/profiler/resident.rs")),
    ("profiler/store.rs", include_str!("../src/profiler/store.rs")),
    ("profiler/sweep.rs", include_str!("../src/profiler/sweep.rs")),
];

const FORBIDDEN: &[&str] =
    &["PrivilegedView", "privileged()", "virt_to_phys", "dram_addr(", "victim_key", "key_location", ".system()", "FlipModel"];

#[test]
fn no_privileged_calls() {
    for (name, src) in SOURCES {
        let code = src.split("#[cfg(test)]").next().unwrap();
        for f in FORBIDDEN {
            assert!(!code.contains(f), "{name} uses {f}");
        }
    }
}
