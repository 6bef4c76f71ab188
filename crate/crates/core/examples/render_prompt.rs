//! Renders the planner prompt for a spawned scene: the bird's-eye-view PNG
//! and the text, with and without safety instructions.
//! Usage: render_prompt [out_dir] [seed]

use std::path::PathBuf;

use mpc_builder::assigner::TaskCommand;
use mpc_builder::planner::{render_prompt, ContextMemory, PlannerFeedback, PromptOptions, PromptTemplate};
use mpc_builder::sim::{spawn_episode, EpisodeConfig};

fn main() -> mpc_builder::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "prompt_out".into()));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    std::fs::create_dir_all(&dir)?;

    let world = spawn_episode(&EpisodeConfig { seed, ..EpisodeConfig::default() })?;
    let template = PromptTemplate::default();
    let memory = ContextMemory::new(5);
    let feedback = PlannerFeedback::rejected(TaskCommand::LaneLeft);

    let safe = render_prompt(&world, Some(&feedback), &memory, &PromptOptions::default(), &template);
    let bare_opts = PromptOptions { safety_instructions: false, ..PromptOptions::default() };
    let bare = render_prompt(&world, None, &memory, &bare_opts, &template);

    std::fs::write(dir.join("bev.png"), safe.png()?)?;
    std::fs::write(dir.join("prompt.txt"), &safe.text)?;
    std::fs::write(dir.join("prompt_no_safety.txt"), &bare.text)?;
    println!("{}", safe.text);
    println!("wrote {}", dir.display());
    Ok(())
}
