use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{Address, Amount};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("{address} holds {current} PCT, {required} PCT required")]
    InsufficientBalance { address: Address, required: Amount, current: Amount },
    #[error("{address} has {current} PCT staked, cannot release or slash {required} PCT")]
    InsufficientStake { address: Address, required: Amount, current: Amount },
    #[error("incentive pool holds {available} PCT, {required} PCT requested")]
    InsufficientPool { required: Amount, available: Amount },
    #[error("genesis already applied")]
    GenesisRepeated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Genesis,
    Transfer,
    Stake,
    Release,
    Slash,
    Reward,
    Fee,
}

/// One ledger movement. `from`/`to` are absent when the pool is the other side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub seq: u64,
    pub kind: EntryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<Address>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<Address>,
    pub amount: Amount,
    pub cause: String,
}

/// Balances, stakes and the incentive pool. After genesis no operation
/// creates or destroys tokens; every method moves an amount between two of
/// the three buckets and appends a journal entry.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    balances: BTreeMap<Address, Amount>,
    stakes: BTreeMap<Address, Amount>,
    pool: Amount,
    total_supply: Amount,
    journal: Vec<LedgerEntry>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn genesis(&mut self, allocations: &[(Address, Amount)], pool: Amount) -> Result<(), LedgerError> {
        if !self.journal.is_empty() || !self.total_supply.is_zero() {
            return Err(LedgerError::GenesisRepeated);
        }
        for (addr, amt) in allocations {
            *self.balances.entry(*addr).or_default() += *amt;
            self.total_supply += *amt;
            self.push(EntryKind::Genesis, None, Some(*addr), *amt, "genesis");
        }
        self.pool = pool;
        self.total_supply += pool;
        if !pool.is_zero() {
            self.push(EntryKind::Genesis, None, None, pool, "genesis:pool");
        }
        Ok(())
    }

    pub fn balance(&self, addr: &Address) -> Amount {
        self.balances.get(addr).copied().unwrap_or_default()
    }

    pub fn staked(&self, addr: &Address) -> Amount {
        self.stakes.get(addr).copied().unwrap_or_default()
    }

    pub fn pool(&self) -> Amount {
        self.pool
    }

    pub fn total_supply(&self) -> Amount {
        self.total_supply
    }

    pub fn balances(&self) -> &BTreeMap<Address, Amount> {
        &self.balances
    }

    pub fn stakes(&self) -> &BTreeMap<Address, Amount> {
        &self.stakes
    }

    pub fn journal(&self) -> &[LedgerEntry] {
        &self.journal
    }

    /// Σ balances + Σ stakes + pool.
    pub fn circulating(&self) -> Amount {
        self.balances.values().copied().sum::<Amount>() + self.stakes.values().copied().sum::<Amount>() + self.pool
    }

    pub fn is_conserved(&self) -> bool {
        self.circulating() == self.total_supply
    }

    fn push(&mut self, kind: EntryKind, from: Option<Address>, to: Option<Address>, amount: Amount, cause: &str) {
        let seq = self.journal.len() as u64;
        self.journal.push(LedgerEntry { seq, kind, from, to, amount, cause: cause.to_owned() });
    }

    fn debit_balance(&mut self, addr: &Address, amount: Amount) -> Result<(), LedgerError> {
        let current = self.balance(addr);
        let rest = current.checked_sub(amount).ok_or(LedgerError::InsufficientBalance {
            address: *addr,
            required: amount,
            current,
        })?;
        self.balances.insert(*addr, rest);
        Ok(())
    }

    fn debit_stake(&mut self, addr: &Address, amount: Amount) -> Result<(), LedgerError> {
        let current = self.staked(addr);
        let rest = current.checked_sub(amount).ok_or(LedgerError::InsufficientStake {
            address: *addr,
            required: amount,
            current,
        })?;
        if rest.is_zero() {
            self.stakes.remove(addr);
        } else {
            self.stakes.insert(*addr, rest);
        }
        Ok(())
    }

    fn debit_pool(&mut self, amount: Amount) -> Result<(), LedgerError> {
        self.pool = self.pool.checked_sub(amount).ok_or(LedgerError::InsufficientPool {
            required: amount,
            available: self.pool,
        })?;
        Ok(())
    }

    pub fn transfer(&mut self, from: &Address, to: &Address, amount: Amount, cause: &str) -> Result<(), LedgerError> {
        self.debit_balance(from, amount)?;
        *self.balances.entry(*to).or_default() += amount;
        self.push(EntryKind::Transfer, Some(*from), Some(*to), amount, cause);
        Ok(())
    }

    /// Balance to stake.
    pub fn lock(&mut self, addr: &Address, amount: Amount, cause: &str) -> Result<(), LedgerError> {
        self.debit_balance(addr, amount)?;
        *self.stakes.entry(*addr).or_default() += amount;
        self.push(EntryKind::Stake, Some(*addr), Some(*addr), amount, cause);
        Ok(())
    }

    /// Stake back to balance.
    pub fn release(&mut self, addr: &Address, amount: Amount, cause: &str) -> Result<(), LedgerError> {
        if amount.is_zero() {
            return Ok(());
        }
        self.debit_stake(addr, amount)?;
        *self.balances.entry(*addr).or_default() += amount;
        self.push(EntryKind::Release, Some(*addr), Some(*addr), amount, cause);
        Ok(())
    }

    /// Stake to pool.
    pub fn slash(&mut self, addr: &Address, amount: Amount, cause: &str) -> Result<(), LedgerError> {
        if amount.is_zero() {
            return Ok(());
        }
        self.debit_stake(addr, amount)?;
        self.pool += amount;
        self.push(EntryKind::Slash, Some(*addr), None, amount, cause);
        Ok(())
    }

    /// Pool to balance.
    pub fn reward(&mut self, addr: &Address, amount: Amount, cause: &str) -> Result<(), LedgerError> {
        if amount.is_zero() {
            return Ok(());
        }
        self.debit_pool(amount)?;
        *self.balances.entry(*addr).or_default() += amount;
        self.push(EntryKind::Reward, None, Some(*addr), amount, cause);
        Ok(())
    }

    /// Balance to pool.
    pub fn fee(&mut self, addr: &Address, amount: Amount, cause: &str) -> Result<(), LedgerError> {
        self.debit_balance(addr, amount)?;
        self.pool += amount;
        self.push(EntryKind::Fee, Some(*addr), None, amount, cause);
        Ok(())
    }
}
