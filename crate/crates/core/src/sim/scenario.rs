//! Scenario files: declarative actors, worlds, and a timed event script.
//!
//! The format is line-oriented structured text. `#` starts a comment, blank
//! lines are ignored, and double quotes group values containing spaces.
//!
//! ```text
//! name demo
//! seed 42
//!
//! [users]
//! alice display="Alice" voice=alto skin=emerald clothing=robe
//!
//! [trusted-parties]
//! gov
//!
//! [worlds]
//! plaza   policy=open
//! gallery policy=restricted:age_over_18 trust=gov
//!
//! [events]
//! 1 mint alice
//! 2 attest gov alice age_over_18
//! 3 authenticate alice gallery
//! ```
//!
//! Field list per section:
//!
//! - `[users]`: `<name>` then `key=value` pairs; `display` and `voice` are
//!   profile fields, every other key becomes an appearance attribute.
//! - `[trusted-parties]`: `<name>` only.
//! - `[worlds]`: `<name> policy=open|restricted:<predicate>` and optional
//!   `trust=<tp>[,<tp>...]`.
//! - `[events]`: `<time> <kind> <args...>` with kinds `mint`,
//!   `attest`, `publish-bundle`, `authenticate`, `open-channel`, `message`,
//!   `exchange-contacts`, `endorse`, `migrate`, `impersonate`, `remove`.
//!
//! Events run in (time, declaration order). Every actor reference is
//! validated at load time.

use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

use crate::contacts::AttributeMap;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown actor `{name}`")]
    UnknownActorRef { line: usize, name: String },
    #[error("cannot read scenario file: {0}")]
    Io(String),
}

impl ScenarioError {
    pub fn code(&self) -> &'static str {
        match self {
            ScenarioError::Parse { .. } => "parse-error",
            ScenarioError::UnknownActorRef { .. } => "unknown-actor-ref",
            ScenarioError::Io(_) => "io-error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserDecl {
    pub name: String,
    pub display_name: String,
    pub voice_tag: String,
    pub appearance: AttributeMap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrustedPartyDecl {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AccessPolicy {
    Open,
    Restricted(String),
}

impl AccessPolicy {
    pub fn describe(&self) -> String {
        match self {
            AccessPolicy::Open => "open".to_string(),
            AccessPolicy::Restricted(p) => format!("restricted:{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldDecl {
    pub name: String,
    pub policy: AccessPolicy,
    pub trusted_issuers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Mint {
        user: String,
    },
    Attest {
        tp: String,
        user: String,
        predicate: String,
    },
    PublishBundle {
        user: String,
        count: u32,
    },
    Authenticate {
        user: String,
        world: String,
    },
    OpenChannel {
        requester: String,
        receiver: String,
    },
    Message {
        from: String,
        to: String,
        text: String,
    },
    ExchangeContacts {
        a: String,
        b: String,
    },
    Endorse {
        endorser: String,
        subject: String,
        target: String,
    },
    Migrate {
        user: String,
        from: String,
        to: String,
    },
    Impersonate {
        attacker: String,
        victim: String,
        observer: String,
    },
    Remove {
        actor: String,
    },
}

impl EventKind {
    pub fn token(&self) -> &'static str {
        match self {
            EventKind::Mint { .. } => "mint",
            EventKind::Attest { .. } => "attest",
            EventKind::PublishBundle { .. } => "publish-bundle",
            EventKind::Authenticate { .. } => "authenticate",
            EventKind::OpenChannel { .. } => "open-channel",
            EventKind::Message { .. } => "message",
            EventKind::ExchangeContacts { .. } => "exchange-contacts",
            EventKind::Endorse { .. } => "endorse",
            EventKind::Migrate { .. } => "migrate",
            EventKind::Impersonate { .. } => "impersonate",
            EventKind::Remove { .. } => "remove",
        }
    }

    /// The actor a transcript record attributes this event to.
    pub fn subject(&self) -> &str {
        match self {
            EventKind::Mint { user } => user,
            EventKind::Attest { tp, .. } => tp,
            EventKind::PublishBundle { user, .. } => user,
            EventKind::Authenticate { user, .. } => user,
            EventKind::OpenChannel { requester, .. } => requester,
            EventKind::Message { from, .. } => from,
            EventKind::ExchangeContacts { a, .. } => a,
            EventKind::Endorse { endorser, .. } => endorser,
            EventKind::Migrate { user, .. } => user,
            EventKind::Impersonate { attacker, .. } => attacker,
            EventKind::Remove { actor } => actor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub at: u64,
    pub kind: EventKind,
}

/// A validated scenario. Together with the seed it fully determines a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub users: Vec<UserDecl>,
    pub trusted_parties: Vec<TrustedPartyDecl>,
    pub worlds: Vec<WorldDecl>,
    pub events: Vec<Event>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        Parser::new(text).run()
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Events in execution order: stable sort by time.
    pub fn ordered_events(&self) -> Vec<Event> {
        let mut events = self.events.clone();
        events.sort_by_key(|e| e.at);
        events
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Users,
    TrustedParties,
    Worlds,
    Events,
}

struct Parser<'a> {
    text: &'a str,
    scenario: Scenario,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            text,
            scenario: Scenario {
                name: "unnamed".to_string(),
                seed: 0,
                users: Vec::new(),
                trusted_parties: Vec::new(),
                worlds: Vec::new(),
                events: Vec::new(),
            },
        }
    }

    fn run(mut self) -> Result<Scenario, ScenarioError> {
        let mut section = Section::None;
        for (idx, raw) in self.text.lines().enumerate() {
            let line_no = idx + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| ScenarioError::Parse {
                    line: line_no,
                    message: "unterminated section header".to_string(),
                })?;
                section = match name {
                    "users" => Section::Users,
                    "trusted-parties" => Section::TrustedParties,
                    "worlds" => Section::Worlds,
                    "events" => Section::Events,
                    other => {
                        return Err(ScenarioError::Parse {
                            line: line_no,
                            message: format!("unknown section `{other}`"),
                        })
                    }
                };
                continue;
            }
            let tokens = tokenize(line, line_no)?;
            match section {
                Section::None => self.parse_header(&tokens, line_no)?,
                Section::Users => self.parse_user(&tokens, line_no)?,
                Section::TrustedParties => self.parse_trusted_party(&tokens, line_no)?,
                Section::Worlds => self.parse_world(&tokens, line_no)?,
                Section::Events => self.parse_event(&tokens, line_no)?,
            }
        }
        self.validate()?;
        Ok(self.scenario)
    }

    fn parse_header(&mut self, tokens: &[String], line_no: usize) -> Result<(), ScenarioError> {
        match tokens {
            [key, value] if key == "name" => {
                self.scenario.name = value.clone();
                Ok(())
            }
            [key, value] if key == "seed" => {
                self.scenario.seed = value.parse().map_err(|_| ScenarioError::Parse {
                    line: line_no,
                    message: format!("seed `{value}` is not a u64"),
                })?;
                Ok(())
            }
            _ => Err(ScenarioError::Parse {
                line: line_no,
                message: "expected `name <ident>` or `seed <u64>` before sections".to_string(),
            }),
        }
    }

    fn parse_user(&mut self, tokens: &[String], line_no: usize) -> Result<(), ScenarioError> {
        let (name, rest) = tokens.split_first().ok_or_else(|| ScenarioError::Parse {
            line: line_no,
            message: "user declaration needs a name".to_string(),
        })?;
        let mut decl = UserDecl {
            name: name.clone(),
            display_name: name.clone(),
            voice_tag: String::new(),
            appearance: AttributeMap::new(),
        };
        for token in rest {
            let (key, value) = split_kv(token, line_no)?;
            match key {
                "display" => decl.display_name = value.to_string(),
                "voice" => decl.voice_tag = value.to_string(),
                attr => {
                    decl.appearance.insert(attr.to_string(), value.to_string());
                }
            }
        }
        self.scenario.users.push(decl);
        Ok(())
    }

    fn parse_trusted_party(
        &mut self,
        tokens: &[String],
        line_no: usize,
    ) -> Result<(), ScenarioError> {
        match tokens {
            [name] => {
                self.scenario
                    .trusted_parties
                    .push(TrustedPartyDecl { name: name.clone() });
                Ok(())
            }
            _ => Err(ScenarioError::Parse {
                line: line_no,
                message: "trusted party declaration is a bare name".to_string(),
            }),
        }
    }

    fn parse_world(&mut self, tokens: &[String], line_no: usize) -> Result<(), ScenarioError> {
        let (name, rest) = tokens.split_first().ok_or_else(|| ScenarioError::Parse {
            line: line_no,
            message: "world declaration needs a name".to_string(),
        })?;
        let mut policy = None;
        let mut trusted_issuers = Vec::new();
        for token in rest {
            let (key, value) = split_kv(token, line_no)?;
            match key {
                "policy" => {
                    policy = Some(if value == "open" {
                        AccessPolicy::Open
                    } else if let Some(predicate) = value.strip_prefix("restricted:") {
                        AccessPolicy::Restricted(predicate.to_string())
                    } else {
                        return Err(ScenarioError::Parse {
                            line: line_no,
                            message: format!(
                                "policy must be `open` or `restricted:<predicate>`, got `{value}`"
                            ),
                        });
                    });
                }
                "trust" => {
                    trusted_issuers = value.split(',').map(str::trim).map(String::from).collect();
                }
                other => {
                    return Err(ScenarioError::Parse {
                        line: line_no,
                        message: format!("unknown world field `{other}`"),
                    })
                }
            }
        }
        let policy = policy.ok_or_else(|| ScenarioError::Parse {
            line: line_no,
            message: "world declaration needs policy=".to_string(),
        })?;
        self.scenario.worlds.push(WorldDecl {
            name: name.clone(),
            policy,
            trusted_issuers,
        });
        Ok(())
    }

    fn parse_event(&mut self, tokens: &[String], line_no: usize) -> Result<(), ScenarioError> {
        let (at, rest) = tokens.split_first().ok_or_else(|| ScenarioError::Parse {
            line: line_no,
            message: "event needs a time".to_string(),
        })?;
        let at: u64 = at.parse().map_err(|_| ScenarioError::Parse {
            line: line_no,
            message: format!("event time `{at}` is not a u64"),
        })?;
        let (kind_token, args) = rest.split_first().ok_or_else(|| ScenarioError::Parse {
            line: line_no,
            message: "event needs a kind".to_string(),
        })?;
        let wrong_arity = |expected: &str| ScenarioError::Parse {
            line: line_no,
            message: format!("`{kind_token}` expects {expected}"),
        };
        let kind = match (kind_token.as_str(), args) {
            ("mint", [user]) => EventKind::Mint { user: user.clone() },
            ("mint", _) => return Err(wrong_arity("<user>")),
            ("attest", [tp, user, predicate]) => EventKind::Attest {
                tp: tp.clone(),
                user: user.clone(),
                predicate: predicate.clone(),
            },
            ("attest", _) => return Err(wrong_arity("<tp> <user> <predicate>")),
            ("publish-bundle", [user, count]) => EventKind::PublishBundle {
                user: user.clone(),
                count: count.parse().map_err(|_| ScenarioError::Parse {
                    line: line_no,
                    message: format!("bundle count `{count}` is not a u32"),
                })?,
            },
            ("publish-bundle", _) => return Err(wrong_arity("<user> <count>")),
            ("authenticate", [user, world]) => EventKind::Authenticate {
                user: user.clone(),
                world: world.clone(),
            },
            ("authenticate", _) => return Err(wrong_arity("<user> <world>")),
            ("open-channel", [requester, receiver]) => EventKind::OpenChannel {
                requester: requester.clone(),
                receiver: receiver.clone(),
            },
            ("open-channel", _) => return Err(wrong_arity("<requester> <receiver>")),
            ("message", [from, to, text]) => EventKind::Message {
                from: from.clone(),
                to: to.clone(),
                text: text.clone(),
            },
            ("message", _) => return Err(wrong_arity("<from> <to> <text>")),
            ("exchange-contacts", [a, b]) => EventKind::ExchangeContacts {
                a: a.clone(),
                b: b.clone(),
            },
            ("exchange-contacts", _) => return Err(wrong_arity("<a> <b>")),
            ("endorse", [endorser, subject, target]) => EventKind::Endorse {
                endorser: endorser.clone(),
                subject: subject.clone(),
                target: target.clone(),
            },
            ("endorse", _) => return Err(wrong_arity("<endorser> <subject> <target>")),
            ("migrate", [user, from, to]) => EventKind::Migrate {
                user: user.clone(),
                from: from.clone(),
                to: to.clone(),
            },
            ("migrate", _) => return Err(wrong_arity("<user> <from-world> <to-world>")),
            ("impersonate", [attacker, victim, observer]) => EventKind::Impersonate {
                attacker: attacker.clone(),
                victim: victim.clone(),
                observer: observer.clone(),
            },
            ("impersonate", _) => return Err(wrong_arity("<attacker> <victim> <observer>")),
            ("remove", [actor]) => EventKind::Remove {
                actor: actor.clone(),
            },
            ("remove", _) => return Err(wrong_arity("<trusted-party>")),
            (other, _) => {
                return Err(ScenarioError::Parse {
                    line: line_no,
                    message: format!("unknown event kind `{other}`"),
                })
            }
        };
        self.scenario.events.push(Event { at, kind });
        Ok(())
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let users: BTreeSet<&str> = self
            .scenario
            .users
            .iter()
            .map(|u| u.name.as_str())
            .collect();
        let tps: BTreeSet<&str> = self
            .scenario
            .trusted_parties
            .iter()
            .map(|t| t.name.as_str())
            .collect();
        let worlds: BTreeSet<&str> = self
            .scenario
            .worlds
            .iter()
            .map(|w| w.name.as_str())
            .collect();

        for world in &self.scenario.worlds {
            for tp in &world.trusted_issuers {
                if !tps.contains(tp.as_str()) {
                    return Err(ScenarioError::UnknownActorRef {
                        line: 0,
                        name: tp.clone(),
                    });
                }
            }
        }

        // Line numbers for event refs: recompute by declaration index is not
        // worth the bookkeeping; report the offending name with line 0 when
        // it came from the events list.
        let check_user = |name: &str| -> Result<(), ScenarioError> {
            users
                .contains(name)
                .then_some(())
                .ok_or_else(|| ScenarioError::UnknownActorRef {
                    line: 0,
                    name: name.to_string(),
                })
        };
        let check_tp = |name: &str| -> Result<(), ScenarioError> {
            tps.contains(name)
                .then_some(())
                .ok_or_else(|| ScenarioError::UnknownActorRef {
                    line: 0,
                    name: name.to_string(),
                })
        };
        let check_world = |name: &str| -> Result<(), ScenarioError> {
            worlds
                .contains(name)
                .then_some(())
                .ok_or_else(|| ScenarioError::UnknownActorRef {
                    line: 0,
                    name: name.to_string(),
                })
        };

        for event in &self.scenario.events {
            match &event.kind {
                EventKind::Mint { user } => check_user(user)?,
                EventKind::Attest { tp, user, .. } => {
                    check_tp(tp)?;
                    check_user(user)?;
                }
                EventKind::PublishBundle { user, .. } => check_user(user)?,
                EventKind::Authenticate { user, world } => {
                    check_user(user)?;
                    check_world(world)?;
                }
                EventKind::OpenChannel {
                    requester,
                    receiver,
                } => {
                    check_user(requester)?;
                    check_user(receiver)?;
                }
                EventKind::Message { from, to, .. } => {
                    check_user(from)?;
                    check_user(to)?;
                }
                EventKind::ExchangeContacts { a, b } => {
                    check_user(a)?;
                    check_user(b)?;
                }
                EventKind::Endorse {
                    endorser,
                    subject,
                    target,
                } => {
                    check_user(endorser)?;
                    check_user(subject)?;
                    check_user(target)?;
                }
                EventKind::Migrate { user, from, to } => {
                    check_user(user)?;
                    check_world(from)?;
                    check_world(to)?;
                }
                EventKind::Impersonate {
                    attacker,
                    victim,
                    observer,
                } => {
                    check_user(attacker)?;
                    check_user(victim)?;
                    check_user(observer)?;
                }
                EventKind::Remove { actor } => check_tp(actor)?,
            }
        }
        Ok(())
    }
}

fn strip_comment(line: &str) -> &str {
    // A `#` outside quotes starts a comment.
    let mut in_quotes = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Split on whitespace, keeping double-quoted spans (including around `=`)
/// together. Quotes are stripped.
fn tokenize(line: &str, line_no: usize) -> Result<Vec<String>, ScenarioError> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut in_quotes = false;
    for ch in line.chars() {
        match ch {
            '"' => in_quotes = !in_quotes,
            c if c.is_whitespace() && !in_quotes => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if in_quotes {
        return Err(ScenarioError::Parse {
            line: line_no,
            message: "unterminated quote".to_string(),
        });
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    Ok(tokens)
}

fn split_kv(token: &str, line_no: usize) -> Result<(&str, &str), ScenarioError> {
    token.split_once('=').ok_or_else(|| ScenarioError::Parse {
        line: line_no,
        message: format!("expected key=value, got `{token}`"),
    })
}
