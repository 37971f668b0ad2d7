pub mod ablation;
pub mod access;
pub mod astro;
pub mod baselines;
pub mod formulations;
pub mod reward;
pub mod scenario;
pub mod scheduler;

#[cfg(doctest)]
mod guide {
    macro_rules! chapter {
        ($name:ident, $file:literal) => {
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            struct $name;
        };
    }
    chapter!(Introduction, "introduction.md");
    chapter!(Orbits, "orbits.md");
    chapter!(Ablation, "ablation.md");
    chapter!(Access, "access.md");
    chapter!(Rewards, "rewards.md");
    chapter!(Placement, "placement.md");
    chapter!(Scheduling, "scheduling.md");
    chapter!(Joint, "joint.md");
    chapter!(Walker, "walker.md");
    chapter!(Scenarios, "scenarios.md");
}
