//! Text-and-image prompt assembly.

use std::fmt::Write as _;
use std::io::Cursor;
use std::path::Path;

use base64::Engine as _;
use image::RgbImage;

use super::bev::{render_bev, BevConfig};
use super::memory::ContextMemory;
use super::PlannerFeedback;
use crate::assigner::TaskCommand;
use crate::error::{Error, Result};
use crate::sim::WorldState;
use crate::switcher::SwitchMode;

const DEFAULT_TEMPLATE: &str = include_str!("../../assets/prompt_template.txt");

const SECTIONS: [&str; 10] = [
    "system",
    "observation",
    "command_format",
    "safety",
    "user",
    "memory",
    "cot",
    "feedback_accepted",
    "feedback_assisted",
    "feedback_rejected",
];

/// Prompt wording, one text block per section.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptTemplate {
    sections: Vec<(String, String)>,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self::parse(DEFAULT_TEMPLATE).expect("bundled prompt template")
    }
}

impl PromptTemplate {
    /// Parses `[[section]]` blocks. Lines starting with `#` before the first
    /// section are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: Vec<(String, String)> = Vec::new();
        for line in text.lines() {
            let trimmed = line.trim();
            if let Some(name) = trimmed.strip_prefix("[[").and_then(|s| s.strip_suffix("]]")) {
                if !SECTIONS.contains(&name) {
                    return Err(Error::Config(format!("unknown prompt section `{name}`")));
                }
                if sections.iter().any(|(n, _)| n == name) {
                    return Err(Error::Config(format!("duplicate prompt section `{name}`")));
                }
                sections.push((name.to_string(), String::new()));
            } else if let Some((_, body)) = sections.last_mut() {
                body.push_str(line);
                body.push('\n');
            } else if !(trimmed.is_empty() || trimmed.starts_with('#')) {
                return Err(Error::Config("prompt text before the first section".into()));
            }
        }
        for (_, body) in &mut sections {
            *body = body.trim().to_string();
        }
        for name in SECTIONS {
            if !sections.iter().any(|(n, _)| n == name) {
                return Err(Error::Config(format!("missing prompt section `{name}`")));
            }
        }
        Ok(Self { sections })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn section(&self, name: &str) -> &str {
        self.sections.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_str()).unwrap_or("")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PromptOptions {
    pub safety_instructions: bool,
    /// Distance quoted in the safety instructions [m].
    pub d_safe: f64,
    pub commands: Vec<TaskCommand>,
    pub bev: BevConfig,
}

impl Default for PromptOptions {
    fn default() -> Self {
        Self {
            safety_instructions: true,
            d_safe: 10.0,
            commands: TaskCommand::MPC_SET.to_vec(),
            bev: BevConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PromptBundle {
    pub image: RgbImage,
    pub text: String,
}

impl PromptBundle {
    pub fn png(&self) -> Result<Vec<u8>> {
        let mut out = Cursor::new(Vec::new());
        self.image.write_to(&mut out, image::ImageFormat::Png).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        Ok(out.into_inner())
    }

    pub fn png_base64(&self) -> Result<String> {
        Ok(base64::engine::general_purpose::STANDARD.encode(self.png()?))
    }
}

/// One-line summary of the ego used in the context memory.
pub fn summarize(world: &WorldState) -> String {
    format!("t={:.1} s, lane {}, speed {:.1} m/s", world.time, world.ego_lane(), world.ego.v)
}

fn observation(world: &WorldState, opts: &PromptOptions) -> String {
    let ego = &world.ego;
    let mut s = String::new();
    let _ = writeln!(s, "Time: {:.1} s", world.time);
    let _ = writeln!(
        s,
        "Ego: lane {} of {} (0 is the rightmost lane), speed {:.1} m/s",
        world.ego_lane(),
        world.road.lane_count,
        ego.v
    );
    let mut visible: Vec<_> =
        world.vehicles.iter().filter(|v| v.x - ego.x <= opts.bev.ahead && ego.x - v.x <= opts.bev.behind).collect();
    visible.sort_by(|a, b| (a.x - ego.x).abs().total_cmp(&(b.x - ego.x).abs()).then(a.id.cmp(&b.id)));
    if visible.is_empty() {
        s.push_str("Vehicles: none in view\n");
    } else {
        s.push_str("Vehicles:\n");
        for (i, v) in visible.iter().enumerate() {
            let dx = v.x - ego.x;
            let place = if dx >= 0.0 { "ahead" } else { "behind" };
            let dv = v.v - ego.v;
            let rel = if dv >= 0.0 { "faster" } else { "slower" };
            let _ = writeln!(
                s,
                "{}. vehicle {}: lane {}, {:.1} m {place}, {:.1} m/s {rel} than you",
                i + 1,
                v.id,
                v.lane,
                dx.abs(),
                dv.abs()
            );
        }
    }
    s
}

fn feedback_line(t: &PromptTemplate, fb: &PlannerFeedback) -> String {
    let key = if fb.rejected {
        "feedback_rejected"
    } else if fb.assist_mode == SwitchMode::Intermediate {
        "feedback_assisted"
    } else {
        "feedback_accepted"
    };
    t.section(key).replace("{command}", fb.last_command.as_str())
}

/// Assembles the prompt. Sections appear in the fixed order system,
/// observation (with feedback), command format, safety instructions if
/// enabled, user instruction, context memory, reasoning cue.
pub fn render_prompt(
    world: &WorldState,
    feedback: Option<&PlannerFeedback>,
    memory: &ContextMemory,
    opts: &PromptOptions,
    template: &PromptTemplate,
) -> PromptBundle {
    let commands: Vec<&str> = opts.commands.iter().map(|c| c.as_str()).collect();
    let fill = |s: &str| s.replace("{commands}", &commands.join(", ")).replace("{d_safe}", &format!("{}", opts.d_safe));
    let mut parts = vec![fill(template.section("system"))];

    let mut obs = format!("{}\n{}", template.section("observation"), observation(world, opts));
    if let Some(fb) = feedback {
        obs.push_str(&feedback_line(template, fb));
        obs.push('\n');
    }
    parts.push(obs.trim_end().to_string());
    parts.push(fill(template.section("command_format")));
    if opts.safety_instructions {
        parts.push(fill(template.section("safety")));
    }
    parts.push(fill(template.section("user")));
    if !memory.is_empty() {
        let mut m = template.section("memory").to_string();
        for (i, e) in memory.iter().enumerate() {
            let _ = write!(m, "\n{}. [{}] decided {}", i + 1, e.observation, e.command);
            if let Some(fb) = &e.feedback {
                let outcome = if fb.rejected {
                    "rejected"
                } else if fb.feasible {
                    "executed"
                } else {
                    "assisted"
                };
                let _ = write!(m, " ({outcome})");
            }
            let reasoning = e.reasoning.trim();
            if !reasoning.is_empty() {
                let short: String = reasoning.chars().take(200).collect();
                let _ = write!(m, ": {}", short.replace('\n', " "));
            }
        }
        parts.push(m);
    }
    parts.push(fill(template.section("cot")));

    let mut text = parts.join("\n\n");
    text.push('\n');
    PromptBundle { image: render_bev(world, &opts.bev), text }
}
