import itertools

import numpy as np
import pytest

from bfdcqo import ground_states
from bfdcqo.builders.protein import (
    AMINO_ACIDS,
    FIXED_CONFIG_BITS,
    ContactEnergyTable,
    PeptideSequence,
    ProteinEncoding,
    build_protein,
    decode_fold,
    encode_fold,
    feasibility_counts,
    fold_energy,
    is_self_avoiding,
    lattice_contacts,
    turns_to_coordinates,
)
from bfdcqo.cli import pauli_term_count
from bfdcqo.errors import DimensionError, InvalidInputError
from bfdcqo.hubo import all_energies, index_to_bitstring


def stub_table(seq: str, seed: int = 0) -> ContactEnergyTable:
    rng = np.random.default_rng(seed)
    return ContactEnergyTable(
        {(a, b): float(rng.uniform(-3, -0.5)) for a, b in itertools.combinations_with_replacement(sorted(set(seq)), 2)}
    )


def all_turn_sequences(num_residues: int):
    """Every turn sequence allowed by the fixed leading bits."""
    enc = ProteinEncoding(num_residues)
    for free in itertools.product((0, 1), repeat=enc.num_config_qubits):
        yield enc.turns(np.array(free))


@pytest.mark.parametrize(
    "seq, qubits, config, interaction, terms",
    [
        ("GYDPETGTWG", 22, 13, 9, 589),
        ("QPPGGSKVILF", 27, 15, 12, 901),
        ("WTFGQGTKVEIK", 33, 17, 16, 1371),
    ],
)
def test_reference_peptide_sizes(seq, qubits, config, interaction, terms):
    inst = build_protein(seq)
    enc = inst.encoding
    assert (enc.num_qubits, enc.num_config_qubits, enc.num_interaction_qubits) == (qubits, config, interaction)
    assert pauli_term_count(inst.hamiltonian) == terms
    assert inst.hamiltonian.locality == 5


def test_fixed_bits_and_first_turns():
    enc = ProteinEncoding(6)
    assert enc.free_config_bits == (5, 7, 8, 9, 10)
    assert enc.config_qubit(1) is None and enc.config_qubit(5) == 0
    turns = enc.turns(np.zeros(enc.num_qubits, dtype=int))
    assert turns[:2] == [1, 0]
    assert turns[2] in (1, 3)


def test_contact_pairs_rule():
    enc = ProteinEncoding(10)
    assert enc.contact_pairs == ((1, 6), (1, 8), (1, 10), (2, 7), (2, 9), (3, 8), (3, 10), (4, 9), (5, 10))
    assert all((j - i) % 2 == 1 and j - i >= 5 for i, j in enc.contact_pairs)


def test_lattice_geometry():
    rng = np.random.default_rng(0)
    turns = rng.integers(0, 4, 12)
    coords = turns_to_coordinates(turns)
    steps = np.diff(coords, axis=0)
    assert np.all(np.einsum("ij,ij->i", steps, steps) == 3)
    # Even beads sit on the sublattice containing the origin.
    assert np.all(coords.sum(axis=1)[::2] % 4 == 0)


def test_contacts_only_at_odd_separation_of_five_or_more():
    for turns in all_turn_sequences(9):
        coords = turns_to_coordinates(turns)
        if is_self_avoiding(coords):
            for i, j in lattice_contacts(coords):
                assert (j - i) % 2 == 1 and j - i >= 5


@pytest.mark.parametrize("num_residues", [4, 5, 6, 7, 8])
def test_feasibility_counts_match_enumeration(num_residues):
    seqs = list(all_turn_sequences(num_residues))
    no_backtrack = sum(all(a != b for a, b in zip(t, t[1:])) for t in seqs)
    assert feasibility_counts(num_residues) == (no_backtrack, len(seqs) - no_backtrack)


def test_saw_folds_have_physical_energy():
    # A self-avoiding fold with exactly its realized contacts switched on pays no penalty.
    seq = "AGHKLMW"
    table = stub_table(seq, 3)
    inst = build_protein(seq, table)
    enc = inst.encoding
    checked = 0
    for turns in all_turn_sequences(len(seq)):
        coords = turns_to_coordinates(turns)
        if not is_self_avoiding(coords):
            continue
        contacts = lattice_contacts(coords)
        bits = encode_fold(turns, enc, contacts)
        assert inst.hamiltonian.evaluate(bits) == pytest.approx(fold_energy(PeptideSequence(seq), table, coords), abs=1e-9)
        checked += 1
    assert checked > 0


def test_penalties_separate_infeasible_configurations_at_six_residues():
    seq = "WYFPDE"
    table = stub_table(seq, 1)
    inst = build_protein(seq, table)
    enc = inst.encoding
    energies = all_energies(inst.hamiltonian)
    feasible = []
    infeasible = []
    for idx, e in enumerate(energies):
        fold = decode_fold(index_to_bitstring(idx, enc.num_qubits), enc)
        (feasible if fold.valid else infeasible).append(e)
    assert infeasible
    assert min(infeasible) >= min(feasible) + min(enc.lambda_gc, enc.lambda_in) - 1e-9


@pytest.mark.parametrize("seq", ["AGHKLMW", "WYFPDEAG", "MKTAYIA"])
def test_ground_states_are_self_avoiding(seq):
    inst = build_protein(seq, stub_table(seq, len(seq)))
    e0, states = ground_states(inst.hamiltonian)
    best_saw = min(
        fold_energy(inst.sequence, stub_table(seq, len(seq)), c)
        for c in map(turns_to_coordinates, all_turn_sequences(len(seq)))
        if is_self_avoiding(c)
    )
    assert e0 == pytest.approx(best_saw, abs=1e-9)
    for b in states:
        assert decode_fold(b, inst.encoding).valid


def test_encode_decode_round_trip():
    enc = ProteinEncoding(8)
    turns = [1, 0, 3, 2, 0, 1, 3]
    bits = encode_fold(turns, enc, [(1, 6)])
    fold = decode_fold(bits, enc)
    assert list(fold.turns) == turns
    assert bits[enc.interaction_qubit(1, 6)] == 1
    with pytest.raises(InvalidInputError):
        encode_fold([0, 0, 3, 2, 0, 1, 3], enc)
    with pytest.raises(DimensionError):
        encode_fold([1, 0, 3], enc)


def test_turns_accept_config_only_vectors():
    enc = ProteinEncoding(7)
    full = np.zeros(enc.num_qubits, dtype=int)
    assert enc.turns(full) == enc.turns(full[: enc.num_config_qubits])
    with pytest.raises(DimensionError):
        enc.turns(np.zeros(3, dtype=int))


def test_peptide_validation():
    assert str(PeptideSequence("gydp")) == "GYDP"
    with pytest.raises(InvalidInputError):
        PeptideSequence("GYBX")
    with pytest.raises(InvalidInputError):
        PeptideSequence("GY")


def test_contact_table_io(tmp_path):
    t = ContactEnergyTable.default()
    assert len(t) == 210
    assert t.energy("W", "G") == t.energy("G", "W")
    assert all(t.energy(a, a) < 0 for a in AMINO_ACIDS)
    path = tmp_path / "t.csv"
    path.write_text(t.to_csv())
    back = ContactEnergyTable.from_csv(path)
    assert all(back.energy(a, b) == t.energy(a, b) for a, b in itertools.product(AMINO_ACIDS, repeat=2))
    with pytest.raises(InvalidInputError):
        ContactEnergyTable.from_csv("res1,res2,energy\nA,G,notanumber\n")
    with pytest.raises(InvalidInputError):
        ContactEnergyTable({("A", "G"): 1.0, ("G", "A"): 2.0})


def test_missing_pair_rejected():
    table = ContactEnergyTable.uniform(-1.0, residues="AG")
    assert table.covers(PeptideSequence("AGAG"))
    assert not table.covers(PeptideSequence("AGAW"))
    with pytest.raises(InvalidInputError):
        build_protein("AGAGAW", table)


def test_metadata_round_trip():
    inst = build_protein("AGHKLM", stub_table("AGHKLM"))
    meta = inst.metadata()
    assert meta["family"] == "protein"
    assert ProteinEncoding.from_dict(meta["encoding"]) == inst.encoding
    assert meta["encoding"]["fixed_config_bits"] == {str(k): v for k, v in FIXED_CONFIG_BITS.items()}
    assert meta["contact_energies"] == [[1, 6, inst.contact_energies[(1, 6)]]]
