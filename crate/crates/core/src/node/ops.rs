use std::collections::BTreeMap;

use super::{Action, Node, NodeError};
use crate::economy::{adjust_params, distribute_epoch, Collection, Ledger, RewardableBallot};
use crate::governance::{
    finalize_ballots, tally_dispute, voter_threshold, BallotOutcome, Dispute, DisputeOutcome, DisputeVote, GovernanceError,
    Precedent, ValidationBallot, Verdict,
};
use crate::journal::{Command, EpochReport, Outcome, PinFee, Subjects};
use crate::model::{canonical_serialize, parse_document, system_block_range, validate_schema, ModelError, ParseMode, PromptDocument};
use crate::primitives::{Address, Amount, UnixTime};
use crate::registry::{LifecycleState, NewRecord, PromptId, PromptRecord, RegistryError};
use crate::store::{Cid, PinReceipt, PutRequest};

impl From<RegistryError> for NodeError {
    fn from(e: RegistryError) -> Self {
        match e {
            RegistryError::NotFound(id) => NodeError::PromptNotFound(id),
            RegistryError::InvalidParent(id) => NodeError::InvalidParent(id),
            RegistryError::DuplicateRegistration(id) => NodeError::DuplicateRegistration(id),
            RegistryError::IllegalTransition { from, .. } => NodeError::Unauthorized(format!("illegal transition from {from}")),
        }
    }
}

impl From<GovernanceError> for NodeError {
    fn from(e: GovernanceError) -> Self {
        match e {
            GovernanceError::QuorumNotMet { have, need } => NodeError::QuorumNotMet { have, need },
        }
    }
}

fn require(caller: Option<Address>) -> Result<Address, NodeError> {
    caller.ok_or_else(|| NodeError::Unauthorized("this command needs a caller".into()))
}

fn wrong_state(r: &PromptRecord, expected: &'static str) -> NodeError {
    NodeError::WrongState { prompt_id: r.prompt_id, state: r.state, expected }
}

fn ensure_balance(ledger: &Ledger, who: &Address, required: Amount, action: Action) -> Result<(), NodeError> {
    let current = ledger.balance(who);
    if current < required {
        return Err(NodeError::InsufficientBalance { action, required, current });
    }
    Ok(())
}

impl Node {
    pub(super) fn apply(
        &mut self,
        caller: Option<Address>,
        at: UnixTime,
        command: &Command,
        subjects: &mut Subjects,
    ) -> Result<Outcome, NodeError> {
        match command {
            Command::Genesis { config, allocations, pool } => {
                let store = self.build_store(config.store_backends)?;
                let mut ledger = Ledger::new();
                let list: Vec<(Address, Amount)> = allocations.iter().map(|a| (a.address, a.balance)).collect();
                ledger.genesis(&list, *pool)?;
                for a in allocations {
                    if let Some(r) = &a.reputation {
                        self.reputation.entry(a.address).or_default().absorb(r);
                    }
                    subjects.addresses.insert(a.address);
                }
                self.config = config.clone();
                self.params = config.economics;
                self.store = store;
                self.ledger = ledger;
                self.genesis_done = true;
                subjects.global = true;
                Ok(Outcome::Genesis { total_supply: self.ledger.total_supply() })
            }
            Command::StoreDocument { document } => self.store_document_op(require(caller)?, document, subjects),
            Command::Pin { cid, replication } => self.pin_op(require(caller)?, cid, *replication),
            Command::Unpin { cid } => self.unpin_op(require(caller)?, cid),
            Command::CollectGarbage => {
                subjects.global = true;
                Ok(Outcome::Collected(self.store.gc()?))
            }
            Command::Register { cid, parent } => self.register_op(require(caller)?, at, cid, *parent, subjects),
            Command::SubmitValidation { prompt_id, score, stake, expertise, comment } => {
                self.validate_op(require(caller)?, at, prompt_id, *score, *stake, expertise, comment, subjects)
            }
            Command::Finalize { prompt_id } => self.finalize_op(prompt_id, subjects),
            Command::OpenDispute { prompt_id, violation } => self.open_dispute_op(require(caller)?, at, prompt_id, violation, subjects),
            Command::CastDisputeVote { dispute_id, verdict } => {
                let voter = require(caller)?;
                let vote = self.check_vote(*dispute_id, &voter, *verdict)?;
                self.reputation.entry(voter).or_default().activity += 1;
                let d = self.disputes.get_mut(dispute_id).expect("checked");
                d.votes.push(vote);
                subjects.prompts.insert(d.prompt_id);
                Ok(Outcome::Dispute(d.clone()))
            }
            Command::ResolveDispute { dispute_id, votes } => self.resolve_op(at, *dispute_id, votes, subjects),
            Command::Deprecate { prompt_id } => self.deprecate_op(require(caller)?, prompt_id, subjects),
            Command::RecordUsage { prompt_id } => self.usage_op(require(caller)?, at, prompt_id, subjects),
            Command::CreateCollection { name, prompts } => self.create_collection_op(require(caller)?, at, name, prompts, subjects),
            Command::UpdateCollection { collection_id, add, remove } => {
                let curator = require(caller)?;
                let c = self.collections.get(collection_id).ok_or(NodeError::CollectionNotFound(*collection_id))?;
                if c.curator != curator {
                    return Err(NodeError::Unauthorized("only the curator can update a collection".into()));
                }
                self.check_members(add)?;
                let c = self.collections.get_mut(collection_id).expect("checked");
                c.prompts.extend(add.iter().copied());
                for id in remove {
                    c.prompts.remove(id);
                }
                c.updated_at = at;
                subjects.collections.insert(*collection_id);
                subjects.prompts.extend(add.iter().chain(remove).copied());
                Ok(Outcome::Collection(c.clone()))
            }
            Command::CloseEpoch => self.close_epoch_op(at, subjects),
        }
    }

    fn record(&self, id: &PromptId) -> Result<&PromptRecord, NodeError> {
        Ok(self.registry.get(id)?)
    }

    fn store_document_op(&mut self, caller: Address, document: &PromptDocument, subjects: &mut Subjects) -> Result<Outcome, NodeError> {
        if document.provenance.creator != caller {
            return Err(NodeError::Unauthorized("documents must name the caller as creator".into()));
        }
        let bytes = canonical_serialize(document).map_err(|e| match e {
            ModelError::SchemaInvalid(r) => NodeError::SchemaInvalid(r),
            other => NodeError::InvalidDocument(other.to_string()),
        })?;
        let range = system_block_range(document);
        let segments = vec![&bytes[..range.start], &bytes[range.clone()], &bytes[range.end..]];
        let mut req = PutRequest { segments, ..Default::default() };
        if let Some(parent) = document.provenance.parent_prompt_id.and_then(|p| self.registry.get(&p).ok()) {
            if self.store.contains(&parent.cid) {
                req.links.push(parent.cid);
            } else {
                req.external_links.push(parent.cid);
            }
            subjects.prompts.insert(parent.prompt_id);
        }
        let cid = self.store.put_object(req)?;
        Ok(Outcome::Stored { cid })
    }

    fn max_replication(&self, cid: &Cid) -> u32 {
        self.pins.get(cid).and_then(|owners| owners.values().max().copied()).unwrap_or(1)
    }

    fn pin_op(&mut self, owner: Address, cid: &Cid, replication: u32) -> Result<Outcome, NodeError> {
        if !self.store.contains(cid) {
            return Err(NodeError::UnknownCid(*cid));
        }
        if replication == 0 {
            return Err(crate::store::StoreError::InvalidReplication.into());
        }
        let first = !self.pins.get(cid).is_some_and(|o| o.contains_key(&owner));
        if first {
            self.store.pin(cid, replication)?;
        } else {
            self.store.replicate(cid, replication)?;
        }
        self.pins.entry(*cid).or_default().insert(owner, replication);
        self.store.set_replication(cid, self.max_replication(cid))?;
        Ok(Outcome::Pinned(self.receipt(cid)?))
    }

    fn receipt(&self, cid: &Cid) -> Result<PinReceipt, NodeError> {
        let providers = self.store.providers(cid)?;
        Ok(PinReceipt { cid: *cid, replication_factor: providers.len() as u32, providers })
    }

    fn unpin_op(&mut self, owner: Address, cid: &Cid) -> Result<Outcome, NodeError> {
        let owners = self.pins.get_mut(cid).filter(|o| o.contains_key(&owner)).ok_or(NodeError::NotPinned(*cid))?;
        owners.remove(&owner);
        if owners.is_empty() {
            self.pins.remove(cid);
        }
        self.store.unpin(cid)?;
        self.store.set_replication(cid, self.max_replication(cid))?;
        Ok(Outcome::Unpinned { cid: *cid })
    }

    fn register_op(
        &mut self,
        creator: Address,
        at: UnixTime,
        cid: &Cid,
        parent: Option<PromptId>,
        subjects: &mut Subjects,
    ) -> Result<Outcome, NodeError> {
        let stake = self.config.fees.registration_stake;
        ensure_balance(&self.ledger, &creator, stake, Action::RegisterPrompt)?;
        if !self.store.contains(cid) {
            return Err(NodeError::UnknownCid(*cid));
        }
        let bytes = self.store.get(cid)?;
        let doc = parse_document(&bytes, ParseMode::Strict).map_err(|e| match e {
            ModelError::SchemaInvalid(r) => NodeError::SchemaInvalid(r),
            other => NodeError::InvalidDocument(other.to_string()),
        })?;
        let report = validate_schema(&doc);
        if !report.is_ok() {
            return Err(NodeError::SchemaInvalid(report));
        }
        if let Some(declared) = doc.provenance.parent_prompt_id {
            if parent != Some(declared) {
                return Err(NodeError::InvalidParent(declared));
            }
        }
        let new = NewRecord { creator, cid: *cid, parent_id: parent, timestamp: at, stake, domain: doc.metadata.domain.clone() };
        self.registry.check(&new)?;

        self.ledger.lock(&creator, stake, "register")?;
        // Registered content is held by the registry so it survives collection.
        self.store.pin(cid, 1)?;
        let record = self.registry.insert(new)?.clone();
        subjects.prompts.insert(record.prompt_id);
        subjects.prompts.extend(parent);
        subjects.domains.insert(record.domain.clone());
        Ok(Outcome::Registered(record))
    }

    #[allow(clippy::too_many_arguments)]
    fn validate_op(
        &mut self,
        validator: Address,
        at: UnixTime,
        prompt_id: &PromptId,
        score: u8,
        stake: Amount,
        expertise: &[String],
        comment: &str,
        subjects: &mut Subjects,
    ) -> Result<Outcome, NodeError> {
        let rec = self.record(prompt_id)?;
        if !matches!(rec.state, LifecycleState::Registered | LifecycleState::UnderValidation) {
            return Err(wrong_state(rec, "Registered or UnderValidation"));
        }
        if score > 10 {
            return Err(NodeError::InvalidScore(score));
        }
        let gov = &self.config.governance;
        let rep = self.reputation_of(&validator);
        if rep < gov.min_validator_rep {
            return Err(NodeError::InsufficientReputation { required: gov.min_validator_rep, current: rep });
        }
        if self.ballots(prompt_id).iter().any(|b| b.validator == validator) {
            return Err(NodeError::AlreadyValidated { validator, prompt_id: *prompt_id });
        }
        let min = self.config.fees.min_validation_stake;
        if stake < min {
            return Err(NodeError::InsufficientStake { required: min, offered: stake });
        }
        ensure_balance(&self.ledger, &validator, stake, Action::SubmitValidation)?;
        if rec.creator == validator {
            return Err(NodeError::SelfValidation);
        }

        let (domain, state) = (rec.domain.clone(), rec.state);
        let expert = expertise.contains(&domain)
            && self.reputation.get(&validator).is_some_and(|r| r.credit_in(&domain) >= gov.expert_min_credit);
        let weight = if expert { gov.expert_multiplier } else { 1 };
        let ballot = ValidationBallot {
            validator,
            prompt_id: *prompt_id,
            score,
            stake,
            expertise_domains: expertise.to_vec(),
            comment: comment.to_owned(),
            weight,
            submitted_at: at,
        };

        self.ledger.lock(&validator, stake, &format!("ballot:{prompt_id}"))?;
        if state == LifecycleState::Registered {
            self.registry.transition(prompt_id, LifecycleState::UnderValidation)?;
        }
        let activity = &mut self.reputation.entry(validator).or_default().activity;
        *activity += 1 + u64::from(!comment.is_empty());
        self.ballots.entry(*prompt_id).or_default().push(ballot.clone());
        subjects.prompts.insert(*prompt_id);
        subjects.domains.insert(domain);
        Ok(Outcome::Ballot(ballot))
    }

    fn finalize_op(&mut self, prompt_id: &PromptId, subjects: &mut Subjects) -> Result<Outcome, NodeError> {
        let rec = self.record(prompt_id)?;
        if rec.state != LifecycleState::UnderValidation {
            return Err(wrong_state(rec, "UnderValidation"));
        }
        let (creator, creator_stake, domain) = (rec.creator, rec.stake, rec.domain.clone());
        let ballots = self.ballots.get(prompt_id).cloned().unwrap_or_default();
        let result = finalize_ballots(*prompt_id, &ballots, &self.config.governance)?;
        let cause = format!("finalize:{prompt_id}");

        for (ballot, (validator, outcome)) in ballots.iter().zip(&result.outcomes) {
            let rep = self.reputation.entry(*validator).or_default();
            rep.ballots += 1;
            match outcome {
                BallotOutcome::Slashed { slashed, returned } => {
                    self.ledger.slash(validator, *slashed, &cause)?;
                    self.ledger.release(validator, *returned, &cause)?;
                }
                BallotOutcome::Rewarded { returned, accuracy } => {
                    self.ledger.release(validator, *returned, &cause)?;
                    rep.unslashed += 1;
                    *rep.domain_credit.entry(domain.clone()).or_default() += 1;
                    self.rewardable.push(RewardableBallot {
                        validator: *validator,
                        prompt_id: *prompt_id,
                        accuracy: *accuracy,
                        weight: ballot.weight,
                    });
                }
            }
            subjects.addresses.insert(*validator);
        }

        match result.final_state {
            LifecycleState::Validated => {
                self.ledger.release(&creator, creator_stake, &cause)?;
                let rep = self.reputation.entry(creator).or_default();
                rep.validated_prompts += 1;
                rep.score_sum += u64::from(result.consensus_score);
            }
            _ => {
                let slashed = creator_stake.mul_ratio(u128::from(self.config.governance.slash_fraction_bps), 10_000);
                self.ledger.slash(&creator, slashed, &cause)?;
                self.ledger.release(&creator, creator_stake - slashed, &cause)?;
            }
        }
        self.registry.transition(prompt_id, result.final_state)?;
        let rec = self.registry.get_mut(prompt_id)?;
        rec.validation_score = Some(result.consensus_score);
        rec.stake = Amount::ZERO;

        subjects.prompts.insert(*prompt_id);
        subjects.addresses.insert(creator);
        subjects.domains.insert(domain);
        self.results.insert(*prompt_id, result.clone());
        Ok(Outcome::Finalized(result))
    }

    fn open_dispute_op(
        &mut self,
        reporter: Address,
        at: UnixTime,
        prompt_id: &PromptId,
        violation: &str,
        subjects: &mut Subjects,
    ) -> Result<Outcome, NodeError> {
        let rec = self.record(prompt_id)?;
        if rec.state != LifecycleState::Validated {
            return Err(wrong_state(rec, "Validated"));
        }
        if rec.creator == reporter {
            return Err(NodeError::Unauthorized("creators cannot dispute their own prompts".into()));
        }
        let stake = self.config.fees.report_stake;
        ensure_balance(&self.ledger, &reporter, stake, Action::ReportIssue)?;
        let domain = rec.domain.clone();
        let creator = rec.creator;

        let threshold = voter_threshold(
            self.reputation.values().map(|r| r.score(self.engagement.as_ref())),
            self.config.governance.dispute_voter_percentile,
        );
        let id = self.disputes.len() as u64;
        self.ledger.lock(&reporter, stake, &format!("dispute:{id}"))?;
        self.registry.transition(prompt_id, LifecycleState::Disputed)?;
        self.reputation.entry(reporter).or_default().activity += 1;
        let dispute = Dispute {
            id,
            prompt_id: *prompt_id,
            reporter,
            stake,
            violation: violation.to_owned(),
            domain: domain.clone(),
            opened_at: at,
            voter_threshold: threshold,
            votes: Vec::new(),
            outcome: None,
            resolved_at: None,
            creator_slashed: Amount::ZERO,
            reporter_reward: Amount::ZERO,
        };
        self.disputes.insert(id, dispute.clone());
        subjects.prompts.insert(*prompt_id);
        subjects.addresses.insert(creator);
        subjects.domains.insert(domain);
        Ok(Outcome::Dispute(dispute))
    }

    fn check_vote(&self, dispute_id: u64, voter: &Address, verdict: Verdict) -> Result<DisputeVote, NodeError> {
        let d = self.disputes.get(&dispute_id).ok_or(NodeError::DisputeNotFound(dispute_id))?;
        if !d.is_open() {
            return Err(NodeError::AlreadyResolved(dispute_id));
        }
        let creator = self.record(&d.prompt_id)?.creator;
        if *voter == d.reporter || *voter == creator {
            return Err(NodeError::Unauthorized("parties cannot vote on their own dispute".into()));
        }
        if d.has_voted(voter) {
            return Err(NodeError::AlreadyVoted { voter: *voter, dispute_id });
        }
        let rep = self.reputation_of(voter);
        if rep <= 0.0 || rep < d.voter_threshold {
            return Err(NodeError::InsufficientVoterReputation { voter: *voter, required: d.voter_threshold, current: rep });
        }
        Ok(DisputeVote { voter: *voter, weight: rep, verdict })
    }

    fn resolve_op(
        &mut self,
        at: UnixTime,
        dispute_id: u64,
        votes: &[(Address, Verdict)],
        subjects: &mut Subjects,
    ) -> Result<Outcome, NodeError> {
        let d = self.disputes.get(&dispute_id).ok_or(NodeError::DisputeNotFound(dispute_id))?;
        if !d.is_open() {
            return Err(NodeError::AlreadyResolved(dispute_id));
        }
        let mut all = d.votes.clone();
        for (voter, verdict) in votes {
            if all.iter().any(|v| v.voter == *voter) {
                return Err(NodeError::AlreadyVoted { voter: *voter, dispute_id });
            }
            all.push(self.check_vote(dispute_id, voter, *verdict)?);
        }
        if all.is_empty() {
            return Err(NodeError::NoVotes(dispute_id));
        }

        let (prompt_id, reporter, stake) = (d.prompt_id, d.reporter, d.stake);
        let rec = self.record(&prompt_id)?;
        let (creator, creator_stake) = (rec.creator, rec.stake);
        let outcome = tally_dispute(&all);
        let cause = format!("dispute:{dispute_id}");
        for (voter, _) in votes {
            self.reputation.entry(*voter).or_default().activity += 1;
        }
        let (mut creator_slashed, mut reporter_reward) = (Amount::ZERO, Amount::ZERO);
        match outcome {
            DisputeOutcome::Upheld => {
                self.ledger.slash(&creator, creator_stake, &cause)?;
                creator_slashed = creator_stake;
                self.ledger.release(&reporter, stake, &cause)?;
                let owed = self.reporter_reward.reward(creator_slashed);
                if owed <= self.ledger.pool() {
                    self.ledger.reward(&reporter, owed, &cause)?;
                    reporter_reward = owed;
                }
                self.registry.transition(&prompt_id, LifecycleState::Deprecated)?;
                self.registry.get_mut(&prompt_id)?.stake = Amount::ZERO;
            }
            DisputeOutcome::Rejected => {
                self.ledger.slash(&reporter, stake, &cause)?;
                self.registry.transition(&prompt_id, LifecycleState::Validated)?;
            }
        }

        let d = self.disputes.get_mut(&dispute_id).expect("checked");
        d.votes = all;
        d.outcome = Some(outcome);
        d.resolved_at = Some(at);
        d.creator_slashed = creator_slashed;
        d.reporter_reward = reporter_reward;
        let d = d.clone();
        self.precedents.append(Precedent {
            dispute_id,
            prompt_id,
            domain: d.domain.clone(),
            violation: d.violation.clone(),
            outcome,
            resolved_at: at,
        });
        subjects.prompts.insert(prompt_id);
        subjects.addresses.extend([creator, reporter]);
        subjects.addresses.extend(d.votes.iter().map(|v| v.voter));
        subjects.domains.insert(d.domain.clone());
        subjects.global = true;
        Ok(Outcome::Dispute(d))
    }

    fn deprecate_op(&mut self, caller: Address, prompt_id: &PromptId, subjects: &mut Subjects) -> Result<Outcome, NodeError> {
        let rec = self.record(prompt_id)?;
        if rec.creator != caller {
            return Err(NodeError::Unauthorized("only the creator can deprecate a prompt".into()));
        }
        if rec.state == LifecycleState::Deprecated {
            return Err(wrong_state(rec, "not Deprecated"));
        }
        if self.disputes.values().any(|d| d.is_open() && d.prompt_id == *prompt_id) {
            return Err(NodeError::DisputePending(*prompt_id));
        }
        let (stake, state, domain) = (rec.stake, rec.state, rec.domain.clone());
        let cause = format!("deprecate:{prompt_id}");
        self.ledger.release(&caller, stake, &cause)?;
        if state == LifecycleState::UnderValidation {
            for b in self.ballots.remove(prompt_id).unwrap_or_default() {
                self.ledger.release(&b.validator, b.stake, &cause)?;
                subjects.addresses.insert(b.validator);
            }
        }
        self.registry.transition(prompt_id, LifecycleState::Deprecated)?;
        let rec = self.registry.get_mut(prompt_id)?;
        rec.stake = Amount::ZERO;
        let rec = rec.clone();
        subjects.prompts.insert(*prompt_id);
        subjects.domains.insert(domain);
        Ok(Outcome::Deprecated(rec))
    }

    fn usage_op(&mut self, user: Address, at: UnixTime, prompt_id: &PromptId, subjects: &mut Subjects) -> Result<Outcome, NodeError> {
        let rec = self.record(prompt_id)?;
        if rec.state != LifecycleState::Validated {
            return Err(NodeError::NotValidated(*prompt_id));
        }
        let fee = self.config.fees.usage_fee;
        ensure_balance(&self.ledger, &user, fee, Action::UsePrompt)?;
        let (creator, domain) = (rec.creator, rec.domain.clone());
        self.ledger.fee(&user, fee, &format!("usage:{prompt_id}"))?;
        let rec = self.registry.get_mut(prompt_id)?;
        rec.total_uses += 1;
        rec.epoch_uses += 1;
        let rec = rec.clone();
        self.usage_log.push((at, *prompt_id));
        subjects.prompts.insert(*prompt_id);
        subjects.addresses.insert(creator);
        subjects.domains.insert(domain);
        subjects.global = true;
        Ok(Outcome::Usage(self.usage_summary(&rec)))
    }

    fn check_members(&self, prompts: &[PromptId]) -> Result<(), NodeError> {
        match prompts.iter().find(|p| !self.registry.contains(p)) {
            Some(missing) => Err(NodeError::PromptNotFound(*missing)),
            None => Ok(()),
        }
    }

    fn create_collection_op(
        &mut self,
        curator: Address,
        at: UnixTime,
        name: &str,
        prompts: &[PromptId],
        subjects: &mut Subjects,
    ) -> Result<Outcome, NodeError> {
        let stake = self.config.fees.collection_stake;
        ensure_balance(&self.ledger, &curator, stake, Action::CreateCollection)?;
        self.check_members(prompts)?;
        let id = self.collections.len() as u64;
        self.ledger.lock(&curator, stake, &format!("collection:{id}"))?;
        self.reputation.entry(curator).or_default().activity += 1;
        let c = Collection {
            id,
            curator,
            name: name.to_owned(),
            prompts: prompts.iter().copied().collect(),
            stake,
            created_at: at,
            updated_at: at,
        };
        self.collections.insert(id, c.clone());
        subjects.collections.insert(id);
        subjects.prompts.extend(prompts.iter().copied());
        Ok(Outcome::Collection(c))
    }

    fn close_epoch_op(&mut self, at: UnixTime, subjects: &mut Subjects) -> Result<Outcome, NodeError> {
        let payouts = distribute_epoch(&mut self.ledger, &self.registry, &self.rewardable, &self.collections, &self.params);
        let total_paid: Amount = payouts.iter().map(|p| p.paid).sum();

        let per_replica = self.config.fees.pin_fee_per_replica;
        let mut pin_fees = Vec::new();
        let pins: Vec<(Cid, Address, u32)> = self
            .pins
            .iter()
            .flat_map(|(cid, owners)| owners.iter().map(move |(o, rf)| (*cid, *o, *rf)))
            .filter(|(_, _, rf)| *rf > 1)
            .collect();
        let mut downgraded = BTreeMap::new();
        for (cid, owner, rf) in pins {
            let amount = per_replica.mul_ratio(u128::from(rf - 1), 1);
            let cause = format!("pin:{cid}");
            if self.ledger.balance(&owner) >= amount {
                self.ledger.fee(&owner, amount, &cause)?;
                pin_fees.push(PinFee { owner, cid, amount, downgraded: false });
            } else {
                self.pins.get_mut(&cid).expect("listed").insert(owner, 1);
                downgraded.insert(cid, ());
                pin_fees.push(PinFee { owner, cid, amount: Amount::ZERO, downgraded: true });
            }
            subjects.addresses.insert(owner);
        }
        for cid in downgraded.keys() {
            self.store.set_replication(cid, self.max_replication(cid))?;
        }

        let supply = self.ledger.total_supply().as_pct_f64();
        let velocity = if supply > 0.0 { total_paid.as_pct_f64() / supply } else { 0.0 };
        let usage: u64 = self.registry.records().map(|r| r.epoch_uses).sum();
        self.params = adjust_params(&self.params, &self.config.adjust, velocity, usage);

        for p in &payouts {
            subjects.addresses.insert(p.address);
        }
        let ids: Vec<PromptId> = self.registry.records().filter(|r| r.epoch_uses > 0).map(|r| r.prompt_id).collect();
        for id in ids {
            self.registry.get_mut(&id)?.epoch_uses = 0;
            subjects.prompts.insert(id);
        }
        self.rewardable.clear();
        let report = EpochReport {
            epoch: self.epoch,
            closed_at: at,
            payouts,
            pin_fees,
            total_paid,
            velocity,
            usage,
            params: self.params,
            pool_after: self.ledger.pool(),
        };
        self.epoch += 1;
        self.epoch_reports.push(report.clone());
        subjects.global = true;
        Ok(Outcome::Epoch(report))
    }
}
