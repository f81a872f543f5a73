//! Deletion requests: authorization, semantic cohesion and delayed deletion.
//!
//! A request never touches existing blocks. An approved request only marks
//! its target; the entry disappears when its sequence is merged into a
//! summary block without it.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::chain::Chain;
use crate::crypto::KeyPair;
use crate::model::{Cosignature, Entry, EntryRef};
use crate::registry::Role;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Authority {
    Owner,
    Admin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenyReason {
    ForeignEntry,
    NotFound,
    NotTargetable,
    UnknownUser,
    NotARequest,
}

impl DenyReason {
    pub fn code(&self) -> &'static str {
        match self {
            DenyReason::ForeignEntry => "foreign-entry",
            DenyReason::NotFound => "not-found",
            DenyReason::NotTargetable => "not-targetable",
            DenyReason::UnknownUser => "unknown-user",
            DenyReason::NotARequest => "not-a-request",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "by", rename_all = "snake_case")]
pub enum Authorization {
    Authorized(Authority),
    Denied(DenyReason),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "parties", rename_all = "snake_case")]
pub enum Cohesion {
    Coherent,
    /// Owners of dependent entries whose cosignature is missing.
    NeedsCosign(BTreeSet<String>),
    /// A dependent entry belongs to an identity without a registered key.
    Blocked,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoEffectReason {
    ForeignEntry,
    NotFound,
    NotTargetable,
    NeedsCosign,
    CohesionBlocked,
    BadSignature,
    UnknownUser,
}

impl NoEffectReason {
    pub fn code(&self) -> &'static str {
        match self {
            NoEffectReason::ForeignEntry => "foreign-entry",
            NoEffectReason::NotFound => "not-found",
            NoEffectReason::NotTargetable => "not-targetable",
            NoEffectReason::NeedsCosign => "needs-cosign",
            NoEffectReason::CohesionBlocked => "cohesion-blocked",
            NoEffectReason::BadSignature => "bad-signature",
            NoEffectReason::UnknownUser => "unknown-user",
        }
    }
}

impl From<DenyReason> for NoEffectReason {
    fn from(r: DenyReason) -> Self {
        match r {
            DenyReason::ForeignEntry => NoEffectReason::ForeignEntry,
            DenyReason::NotFound => NoEffectReason::NotFound,
            DenyReason::NotTargetable | DenyReason::NotARequest => NoEffectReason::NotTargetable,
            DenyReason::UnknownUser => NoEffectReason::UnknownUser,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "snake_case")]
pub enum DeletionVerdict {
    Approved,
    NoEffect(NoEffectReason),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeletionDecision {
    pub request: EntryRef,
    pub target: EntryRef,
    pub verdict: DeletionVerdict,
    pub required_cosigners: BTreeSet<String>,
}

impl DeletionDecision {
    pub fn is_approved(&self) -> bool {
        self.verdict == DeletionVerdict::Approved
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    DependsOnMarked,
    DependsOnDropped,
    DanglingDependency,
    BadSignature,
    UnknownUser,
}

impl RejectReason {
    pub fn code(&self) -> &'static str {
        match self {
            RejectReason::DependsOnMarked => "depends-on-marked",
            RejectReason::DependsOnDropped => "depends-on-dropped",
            RejectReason::DanglingDependency => "dangling-dependency",
            RejectReason::BadSignature => "bad-signature",
            RejectReason::UnknownUser => "unknown-user",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "reason", rename_all = "snake_case")]
pub enum Admission {
    Admit,
    Reject(RejectReason),
}

pub fn make_delete_request(keys: &KeyPair, user: &str, target: EntryRef) -> Entry {
    Entry::delete_request(keys, user, target, Vec::new())
}

/// Owner if the target was signed with the requester's key, Admin if the
/// requester is the admin identity. The request's signature is assumed to
/// be verified already.
pub fn authorize(chain: &Chain, request: &Entry) -> Authorization {
    let Some(req) = request.as_delete_request() else {
        return Authorization::Denied(DenyReason::NotARequest);
    };
    let registry = chain.registry();
    let Some(requester_key) = registry.key_of(&req.user) else {
        return Authorization::Denied(DenyReason::UnknownUser);
    };
    if registry.role_of(&req.user) == Some(Role::Admin) {
        return Authorization::Authorized(Authority::Admin);
    }
    let Some(found) = chain.lookup_entry(req.target) else {
        return Authorization::Denied(DenyReason::NotFound);
    };
    if found.entry.as_delete_request().is_some() {
        return Authorization::Denied(DenyReason::NotTargetable);
    }
    match registry.key_of(found.entry.user()) {
        Some(owner_key) if owner_key == requester_key => Authorization::Authorized(Authority::Owner),
        _ => Authorization::Denied(DenyReason::ForeignEntry),
    }
}

/// Live, unmarked data entries that depend on `target`, directly or through
/// other dependents.
pub fn dependents(chain: &Chain, target: EntryRef) -> BTreeMap<EntryRef, String> {
    let mut reverse: BTreeMap<EntryRef, Vec<(EntryRef, &str)>> = BTreeMap::new();
    for (at, entry) in chain.live_entries() {
        if chain.is_marked(at) {
            continue;
        }
        for dep in entry.depends_on() {
            reverse.entry(*dep).or_default().push((at, entry.user()));
        }
    }
    let mut out = BTreeMap::new();
    let mut stack = vec![target];
    while let Some(r) = stack.pop() {
        for (at, user) in reverse.get(&r).into_iter().flatten() {
            if *at != target && !out.contains_key(at) {
                out.insert(*at, user.to_string());
                stack.push(*at);
            }
        }
    }
    out
}

/// Every owner of a dependent entry, other than `requester`, must have
/// cosigned the deletion of `target`.
pub fn check_cohesion(chain: &Chain, target: EntryRef, requester: &str, cosignatures: &[Cosignature]) -> Cohesion {
    let registry = chain.registry();
    let mut missing = BTreeSet::new();
    for owner in dependents(chain, target).into_values() {
        if owner == requester {
            continue;
        }
        let Some(key) = registry.key_of(&owner) else {
            return Cohesion::Blocked;
        };
        let signed = cosignatures.iter().any(|c| c.user == owner && c.verify(key, target));
        if !signed {
            missing.insert(owner);
        }
    }
    if missing.is_empty() {
        Cohesion::Coherent
    } else {
        Cohesion::NeedsCosign(missing)
    }
}

/// Judges the request stored at `request` and, if approved, marks its
/// target. `extra_cosignatures` join those carried by the request.
/// Block contents are never changed.
pub fn process_delete_request(
    chain: &mut Chain,
    request: EntryRef,
    extra_cosignatures: &[Cosignature],
) -> DeletionDecision {
    let (decision, mark) = judge_delete_request(chain, request, extra_cosignatures);
    if let Some(target) = mark {
        chain.mark_for_deletion(target);
    }
    decision
}

/// The verdict [`process_delete_request`] would reach, without marking.
pub fn judge_delete_request(
    chain: &Chain,
    request: EntryRef,
    extra_cosignatures: &[Cosignature],
) -> (DeletionDecision, Option<EntryRef>) {
    let no_effect = |target, reason, required_cosigners| {
        let decision =
            DeletionDecision { request, target, verdict: DeletionVerdict::NoEffect(reason), required_cosigners };
        (decision, None)
    };
    let Some(entry) = chain.lookup_entry(request).map(|f| f.entry) else {
        return no_effect(request, NoEffectReason::NotFound, BTreeSet::new());
    };
    let Some(req) = entry.as_delete_request() else {
        return no_effect(request, NoEffectReason::NotTargetable, BTreeSet::new());
    };
    let target = req.target;
    match chain.registry().key_of(&req.user) {
        None => return no_effect(target, NoEffectReason::UnknownUser, BTreeSet::new()),
        Some(key) if !entry.verify_signature(key) => {
            return no_effect(target, NoEffectReason::BadSignature, BTreeSet::new())
        }
        Some(_) => {}
    }
    if chain.lookup_entry(target).is_none() {
        return no_effect(target, NoEffectReason::NotFound, BTreeSet::new());
    }
    if let Authorization::Denied(reason) = authorize(chain, entry) {
        return no_effect(target, reason.into(), BTreeSet::new());
    }
    let cosignatures: Vec<Cosignature> = req.cosignatures.iter().chain(extra_cosignatures).cloned().collect();
    let required: BTreeSet<String> =
        dependents(chain, target).into_values().filter(|owner| *owner != req.user).collect();
    match check_cohesion(chain, target, &req.user, &cosignatures) {
        Cohesion::Coherent => {}
        Cohesion::NeedsCosign(_) => return no_effect(target, NoEffectReason::NeedsCosign, required),
        Cohesion::Blocked => return no_effect(target, NoEffectReason::CohesionBlocked, required),
    }
    let decision =
        DeletionDecision { request, target, verdict: DeletionVerdict::Approved, required_cosigners: required };
    (decision, Some(target))
}

/// Admission of a data entry into the next block.
pub fn admit_transaction(chain: &Chain, entry: &Entry) -> Admission {
    if let Some(reason) = signature_problem(chain, entry) {
        return Admission::Reject(reason);
    }
    for dep in entry.depends_on() {
        if chain.is_marked(*dep) {
            return Admission::Reject(RejectReason::DependsOnMarked);
        }
        if chain.lookup_entry(*dep).is_none() {
            let reason = if dep.block_number < chain.marker() {
                RejectReason::DependsOnDropped
            } else {
                RejectReason::DanglingDependency
            };
            return Admission::Reject(reason);
        }
    }
    Admission::Admit
}

/// Admission of a deletion request. Its merit is judged only once it is in
/// the chain; here the signer must be known and the signature valid.
pub fn admit_delete_request(chain: &Chain, entry: &Entry) -> Admission {
    match signature_problem(chain, entry) {
        Some(reason) => Admission::Reject(reason),
        None => Admission::Admit,
    }
}

/// Admission of any entry, dispatching on its kind.
pub fn admit(chain: &Chain, entry: &Entry) -> Admission {
    match entry {
        Entry::Data(_) => admit_transaction(chain, entry),
        Entry::DeleteRequest(_) => admit_delete_request(chain, entry),
    }
}

fn signature_problem(chain: &Chain, entry: &Entry) -> Option<RejectReason> {
    match chain.registry().key_of(entry.user()) {
        None => Some(RejectReason::UnknownUser),
        Some(key) if !entry.verify_signature(key) => Some(RejectReason::BadSignature),
        Some(_) => None,
    }
}
