use promptchain_core::economy::ReputationRecord;
use promptchain_core::journal::{read_ndjson, write_ndjson, Command, GenesisAllocation, Outcome};
use promptchain_core::model::PromptDocument;
use promptchain_core::node::{Node, NodeConfig, StorageKind};
use promptchain_core::registry::LifecycleState;
use promptchain_core::{Address, Amount};

const T0: u64 = 1_650_000_000;

fn voter() -> ReputationRecord {
    ReputationRecord { validated_prompts: 1, score_sum: 7, ballots: 6, unslashed: 6, activity: 12, domain_credit: Default::default() }
}

#[test]
fn prompt_lifecycle_survives_a_journal_round_trip() {
    let creator = Address::derive("maker");
    let user = Address::derive("reader");
    let op = Address::derive("op");
    let validators: Vec<Address> = (0..3).map(|i| Address::derive(&format!("checker-{i}"))).collect();
    let mut allocations = vec![
        GenesisAllocation { address: creator, balance: Amount::pct(1_000), reputation: None },
        GenesisAllocation { address: user, balance: Amount::pct(10), reputation: None },
    ];
    allocations.extend(validators.iter().map(|v| GenesisAllocation { address: *v, balance: Amount::pct(500), reputation: Some(voter()) }));
    let mut node = Node::with_genesis(NodeConfig::default(), allocations, Amount::pct(10_000), T0).unwrap();

    let doc = PromptDocument::minimal(creator, T0, "Release notes writer", "code", "Write release notes from this changelog.");
    let Ok(Outcome::Stored { cid }) = node.execute(Some(creator), T0 + 1, Command::StoreDocument { document: doc }) else { panic!("store") };
    let Ok(Outcome::Registered(rec)) = node.execute(Some(creator), T0 + 2, Command::Register { cid, parent: None }) else { panic!("register") };
    for (v, score) in validators.iter().zip([7, 8, 7]) {
        let cmd = Command::SubmitValidation { prompt_id: rec.prompt_id, score, stake: Amount::pct(50), expertise: vec![], comment: String::new() };
        node.execute(Some(*v), T0 + 3, cmd).unwrap();
    }
    let Ok(Outcome::Finalized(result)) = node.execute(Some(op), T0 + 4, Command::Finalize { prompt_id: rec.prompt_id }) else { panic!("finalize") };
    assert_eq!((result.consensus_score, result.final_state), (7, LifecycleState::Validated));
    for _ in 0..5 {
        node.execute(Some(user), T0 + 5, Command::RecordUsage { prompt_id: rec.prompt_id }).unwrap();
    }
    let Ok(Outcome::Epoch(report)) = node.execute(Some(op), T0 + 6, Command::CloseEpoch) else { panic!("epoch") };
    assert_eq!(report.usage, 5);
    assert_eq!(node.ledger().balance(&user), Amount::pct(10) - Amount::from_decimal(5, 1));
    assert!(node.check_invariants().is_empty());

    let mut bytes = Vec::new();
    write_ndjson(&mut bytes, node.journal()).unwrap();
    let events = read_ndjson(bytes.as_slice()).unwrap();
    let again = Node::replay(&events, StorageKind::Memory).unwrap();
    assert_eq!(again.state_digest(), node.state_digest());
    assert_eq!(again.registry().get(&rec.prompt_id).unwrap().total_uses, 5);
}
