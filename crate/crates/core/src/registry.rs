//! Name-keyed registries of interchangeable strategies.
//!
//! Each family (activations, eigensolvers, ...) exposes a trait; concrete
//! implementations register a constructor under a stable name so that model
//! files and command-line flags can select them at runtime.

use crate::error::{Error, Result};

type Constructor<T> = fn() -> Box<T>;

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<(&'static str, Constructor<T>)>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Registers `ctor` under `name`, replacing any earlier entry of that name.
    pub fn register(&mut self, name: &'static str, ctor: Constructor<T>) -> &mut Self {
        if let Some(slot) = self.entries.iter_mut().find(|(n, _)| *n == name) {
            slot.1 = ctor;
        } else {
            self.entries.push((name, ctor));
        }
        self
    }

    pub fn with(mut self, name: &'static str, ctor: Constructor<T>) -> Self {
        self.register(name, ctor);
        self
    }

    pub fn create(&self, name: &str) -> Result<Box<T>> {
        let key = name.trim().to_ascii_lowercase();
        self.entries
            .iter()
            .find(|(n, _)| *n == key)
            .map(|(_, ctor)| ctor())
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        let key = name.trim().to_ascii_lowercase();
        self.entries.iter().any(|(n, _)| *n == key)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }
}
