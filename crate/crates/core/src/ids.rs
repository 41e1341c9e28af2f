//! Identifier newtypes shared by every subsystem.
//!
//! All identifiers are whitespace-free tokens so they can appear verbatim in
//! wire headers, log rows and trace lines.

use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {kind} `{value}`: {reason}")]
pub struct InvalidId {
    pub kind: &'static str,
    pub value: String,
    pub reason: &'static str,
}

fn is_app_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_token_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.')
}

macro_rules! token_id {
    ($(#[$meta:meta])* $name:ident, $kind:literal, $pred:path, $reason:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(value: impl Into<String>) -> Result<Self, InvalidId> {
                let value = value.into();
                if value.is_empty() {
                    return Err(InvalidId { kind: $kind, value, reason: "empty" });
                }
                if !value.chars().all($pred) {
                    return Err(InvalidId { kind: $kind, value, reason: $reason });
                }
                Ok(Self(value))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = InvalidId;

            fn try_from(value: String) -> Result<Self, Self::Error> {
                Self::new(value)
            }
        }

        impl TryFrom<&str> for $name {
            type Error = InvalidId;

            fn try_from(value: &str) -> Result<Self, Self::Error> {
                Self::new(value)
            }
        }

        impl From<$name> for String {
            fn from(id: $name) -> String {
                id.0
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl std::str::FromStr for $name {
            type Err = InvalidId;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::new(s)
            }
        }
    };
}

token_id!(
    /// Application name such as `comsol` or `App4`. Restricted to `[A-Za-z0-9_]+`.
    ApplicationId,
    "application id",
    is_app_char,
    "only [A-Za-z0-9_] allowed"
);
token_id!(NetworkId, "network id", is_token_char, "only [A-Za-z0-9_.-] allowed");
token_id!(ServerId, "server id", is_token_char, "only [A-Za-z0-9_.-] allowed");
token_id!(JobId, "job id", is_token_char, "only [A-Za-z0-9_.-] allowed");
token_id!(UserId, "user id", is_token_char, "only [A-Za-z0-9_.-] allowed");

/// A (network, server) pair naming one server across the whole map.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ServerRef {
    pub network: NetworkId,
    pub server: ServerId,
}

impl ServerRef {
    pub fn new(network: NetworkId, server: ServerId) -> Self {
        Self { network, server }
    }
}

impl fmt::Display for ServerRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.network, self.server)
    }
}

/// Parses strict dotted-quad IPv4 text (no leading zeros, exactly four octets).
pub fn parse_ipv4(text: &str) -> Option<std::net::Ipv4Addr> {
    text.parse().ok()
}
