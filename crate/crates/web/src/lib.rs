//! The login walkthrough in the browser: three users, one tick per click.

use std::collections::BTreeMap;

use prunechain::deletion::make_delete_request;
use prunechain::node::{walkthrough, Node, TickOutcome};
use prunechain::render::{golden_render, render_entry};
use prunechain::{verify_chain, Entry, EntryRef};
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct Demo {
    node: Node,
    /// Logins so far per user; the n-th login is on terminal `ttyn`.
    logins: BTreeMap<&'static str, u32>,
}

impl Demo {
    pub fn submit_login(&mut self, user: &str) -> Result<String, String> {
        let user = known_user(user)?;
        let n = self.logins.entry(user).or_default();
        *n += 1;
        let entry = walkthrough::login(user, *n);
        self.submit(entry)
    }

    pub fn submit_deletion(&mut self, user: &str, target: &str) -> Result<String, String> {
        let target: EntryRef = target.parse()?;
        let name = if user == walkthrough::ADMIN { walkthrough::ADMIN } else { known_user(user)? };
        self.submit(make_delete_request(&walkthrough::keys(name), name, target))
    }

    pub fn advance(&mut self) -> Result<TickOutcome, String> {
        self.node.tick().map_err(|e| e.to_string())
    }

    fn submit(&mut self, entry: Entry) -> Result<String, String> {
        let text = render_entry(&entry);
        self.node.submit(entry).map_err(|e| e.to_string())?;
        Ok(text)
    }
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        Demo { node: walkthrough::genesis(), logins: BTreeMap::new() }
    }

    /// Queues a login for `user`; returns the rendered entry.
    pub fn login(&mut self, user: &str) -> Result<String, JsError> {
        self.submit_login(user).map_err(|e| JsError::new(&e))
    }

    /// Queues `user`'s request to delete the entry at `target`, e.g. `"3.1"`.
    pub fn request_deletion(&mut self, user: &str, target: &str) -> Result<String, JsError> {
        self.submit_deletion(user, target).map_err(|e| JsError::new(&e))
    }

    /// Advances the clock by one; returns the outcome as JSON.
    pub fn tick(&mut self) -> Result<String, JsError> {
        let outcome = self.advance().map_err(|e| JsError::new(&e))?;
        Ok(serde_json::to_string(&outcome).expect("outcomes serialize"))
    }

    /// One line per live block.
    pub fn render(&self) -> String {
        golden_render(self.node.chain())
    }

    pub fn marker(&self) -> u64 {
        self.node.chain().marker()
    }

    pub fn length(&self) -> u64 {
        self.node.chain().len()
    }

    pub fn waiting(&self) -> usize {
        self.node.mempool.len()
    }

    pub fn valid(&self) -> bool {
        verify_chain(self.node.chain()).is_valid()
    }
}

impl Default for Demo {
    fn default() -> Self {
        Demo::new()
    }
}

fn known_user(user: &str) -> Result<&'static str, String> {
    walkthrough::USERS.into_iter().find(|u| *u == user).ok_or_else(|| format!("unknown user {user}"))
}
