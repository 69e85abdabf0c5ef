//! Agent callbacks: anything that turns a view into an action string.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use crate::game::{ActionCommand, PlayerGameData};

pub type AgentError = Box<dyn std::error::Error + Send + Sync>;

pub trait Agent: Send {
    fn act(&mut self, view: &PlayerGameData) -> Result<String, AgentError>;
}

impl<F> Agent for F
where
    F: FnMut(&PlayerGameData) -> Result<String, AgentError> + Send,
{
    fn act(&mut self, view: &PlayerGameData) -> Result<String, AgentError> {
        self(view)
    }
}

impl Agent for Box<dyn Agent> {
    fn act(&mut self, view: &PlayerGameData) -> Result<String, AgentError> {
        (**self).act(view)
    }
}

/// Rule-based agent that kicks no matter what it sees.
pub fn kick_agent(_view: &PlayerGameData) -> &'static str {
    "KICK"
}

#[derive(Debug, Clone, Copy, Default)]
pub struct KickAgent;

impl Agent for KickAgent {
    fn act(&mut self, view: &PlayerGameData) -> Result<String, AgentError> {
        Ok(kick_agent(view).to_owned())
    }
}

/// Plays a fixed function of the frame index. Useful for determinism checks
/// since the choice never depends on timing.
#[derive(Clone)]
pub struct ScriptedAgent {
    script: Arc<dyn Fn(u32) -> ActionCommand + Send + Sync>,
}

impl ScriptedAgent {
    pub fn new(script: impl Fn(u32) -> ActionCommand + Send + Sync + 'static) -> Self {
        Self {
            script: Arc::new(script),
        }
    }
}

impl std::fmt::Debug for ScriptedAgent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ScriptedAgent")
    }
}

impl Agent for ScriptedAgent {
    fn act(&mut self, view: &PlayerGameData) -> Result<String, AgentError> {
        Ok((self.script)(view.frame_index).as_str().to_owned())
    }
}

/// Call the agent, mapping errors and panics to NEUTRAL. The flag is true
/// when the callback failed.
pub(crate) fn invoke<A: Agent + ?Sized>(agent: &mut A, view: &PlayerGameData) -> (String, bool) {
    match catch_unwind(AssertUnwindSafe(|| agent.act(view))) {
        Ok(Ok(action)) => (action, false),
        Ok(Err(e)) => {
            log::warn!("agent failed on frame {}: {e}", view.frame_index);
            (ActionCommand::Neutral.as_str().to_owned(), true)
        }
        Err(_) => {
            log::warn!("agent panicked on frame {}", view.frame_index);
            (ActionCommand::Neutral.as_str().to_owned(), true)
        }
    }
}
