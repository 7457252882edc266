import hashlib

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chainlog import Chain, StreamItem, make_transaction
from chainlog.errors import (
    DuplicateStream,
    MalformedTransaction,
    UnknownStream,
    UnknownTxid,
)
from chainlog.ledger import ZERO_HASH, compute_block_hash, compute_txid

GENESIS_BYTES = 8 + 32 + 4 + 32  # height, prev_hash, tx count, block hash


def fresh_chain(streams=("a", "b")):
    chain = Chain()
    for name in streams:
        chain.create_stream(name)
    return chain


def tx_of(*items, publisher=0):
    return make_transaction([StreamItem(s, k, v) for s, k, v in items], publisher)


def confirmed(chain, tx):
    chain.publish(tx)
    chain.confirm_block()
    return tx.txid


class TestStreams:
    def test_create_and_publish(self):
        chain = fresh_chain()
        txid = confirmed(chain, tx_of(("a", b"k", b"v")))
        assert chain.list_stream_key_items("a", b"k") == [(txid, b"v")]

    def test_duplicate_stream(self):
        chain = fresh_chain()
        with pytest.raises(DuplicateStream):
            chain.create_stream("a")

    def test_unknown_stream_on_publish(self):
        chain = fresh_chain()
        with pytest.raises(UnknownStream):
            chain.publish(tx_of(("nope", b"k", b"v")))

    def test_unknown_stream_on_list(self):
        with pytest.raises(UnknownStream):
            fresh_chain().list_stream_key_items("nope", b"k")


class TestPublish:
    def test_pending_invisible_until_confirmed(self):
        chain = fresh_chain()
        chain.publish(tx_of(("a", b"k", b"v")))
        assert chain.list_stream_key_items("a", b"k") == []
        chain.confirm_block()
        assert len(chain.list_stream_key_items("a", b"k")) == 1

    def test_txid_mismatch_rejected(self):
        chain = fresh_chain()
        tx = tx_of(("a", b"k", b"v"))
        tx.items[0].value = b"tampered"
        with pytest.raises(MalformedTransaction):
            chain.publish(tx)

    def test_empty_items_rejected(self):
        with pytest.raises(MalformedTransaction):
            make_transaction([])

    def test_empty_key_rejected(self):
        chain = fresh_chain()
        with pytest.raises(MalformedTransaction):
            chain.publish(tx_of(("a", b"", b"v")))

    def test_empty_value_is_legal(self):
        chain = fresh_chain()
        txid = confirmed(chain, tx_of(("a", b"k", b"")))
        assert chain.list_stream_key_items("a", b"k") == [(txid, b"")]


class TestConfirm:
    def test_batch_below_limit(self):
        chain = fresh_chain()
        t1, t2 = tx_of(("a", b"1", b"")), tx_of(("a", b"2", b""))
        chain.publish(t1)
        chain.publish(t2)
        block = chain.confirm_block()
        assert block.height == 1
        assert block.txids == [t1.txid, t2.txid]

    def test_empty_block_permitted(self):
        chain = fresh_chain()
        block = chain.confirm_block()
        assert block.txids == []
        assert chain.verify_chain()

    def test_batch_limit_splits(self):
        chain = Chain(batch_limit=512)
        chain.create_stream("a")
        for i in range(600):
            chain.publish(tx_of(("a", str(i).encode(), b"")))
        block = chain.confirm_block()
        assert len(block.txids) == 512
        assert chain.pending_count == 88

    def test_order_preserved_across_blocks(self):
        chain = Chain(batch_limit=2)
        chain.create_stream("a")
        txs = [tx_of(("a", b"same", str(i).encode())) for i in range(5)]
        for tx in txs:
            chain.publish(tx)
        while chain.pending_count:
            chain.confirm_block()
        got = chain.list_stream_key_items("a", b"same")
        assert got == [(tx.txid, tx.items[0].value) for tx in txs]


class TestGetRaw:
    def test_roundtrip(self):
        chain = fresh_chain()
        tx = tx_of(("a", b"k", b"v"), ("b", b"x", b"y"), publisher=3)
        confirmed(chain, tx)
        assert chain.get_raw_transaction(tx.txid) is tx

    def test_unknown_txid(self):
        with pytest.raises(UnknownTxid):
            fresh_chain().get_raw_transaction(b"\x00" * 32)

    def test_pending_not_fetchable(self):
        chain = fresh_chain()
        tx = tx_of(("a", b"k", b"v"))
        chain.publish(tx)
        with pytest.raises(UnknownTxid):
            chain.get_raw_transaction(tx.txid)


class TestSizeAndSerialize:
    def test_genesis_size(self):
        chain = Chain()
        assert chain.chain_size_bytes() == GENESIS_BYTES

    def test_size_matches_serialization(self):
        chain = fresh_chain()
        for i in range(40):
            chain.publish(tx_of(("a", b"%04d" % i, b"payload")))
            if i % 7 == 0:
                chain.confirm_block()
        chain.confirm_block()
        assert chain.chain_size_bytes() == len(chain.serialize())

    def test_size_affine_in_record_count(self):
        # identical-length transactions: equal increments per block of k txs
        sizes = []
        for n in (10, 20, 30):
            chain = fresh_chain()
            for i in range(n):
                chain.publish(tx_of(("a", b"%05d" % i, b"x" * 20)))
            chain.confirm_block()
            sizes.append(chain.chain_size_bytes())
        assert sizes[2] - sizes[1] == sizes[1] - sizes[0]

    def test_append_only_byte_prefix(self):
        chain = fresh_chain()
        before = chain.serialize()
        chain.publish(tx_of(("a", b"k", b"v")))
        assert chain.serialize() == before  # pending untracked
        chain.confirm_block()
        assert chain.serialize().startswith(before)


class TestVerify:
    def test_fresh_chain_verifies(self):
        chain = fresh_chain()
        confirmed(chain, tx_of(("a", b"k", b"v")))
        assert chain.verify_chain()

    def test_flipped_value_detected(self):
        chain = fresh_chain()
        tx = tx_of(("a", b"k", b"value"))
        confirmed(chain, tx)
        stored = chain.get_raw_transaction(tx.txid)
        original = stored.items[0].value
        stored.items[0].value = b"valuf"
        assert not chain.verify_chain()
        stored.items[0].value = original
        assert chain.verify_chain()

    def test_flipped_block_hash_detected(self):
        chain = fresh_chain()
        confirmed(chain, tx_of(("a", b"k", b"v")))
        block = chain.blocks[-1]
        original = block.block_hash
        block.block_hash = bytes([original[0] ^ 1]) + original[1:]
        assert not chain.verify_chain()
        block.block_hash = original
        assert chain.verify_chain()

    def test_flipped_prev_hash_detected(self):
        chain = fresh_chain()
        confirmed(chain, tx_of(("a", b"k", b"v")))
        block = chain.blocks[-1]
        original = block.prev_hash
        block.prev_hash = ZERO_HASH
        assert not chain.verify_chain()
        block.prev_hash = original
        assert chain.verify_chain()

    def test_many_inserts_still_verify(self):
        chain = fresh_chain()
        for i in range(10_000):
            chain.publish(tx_of(("a", b"%06d" % i, b"")))
            if i % 512 == 0:
                chain.confirm_block()
        chain.confirm_block()
        assert chain.verify_chain()


class TestHashing:
    def test_txid_is_content_hash(self):
        tx = tx_of(("a", b"k", b"v"), publisher=2)
        assert tx.txid == compute_txid(2, tx.items)
        assert len(tx.txid) == 32

    def test_genesis_hash_definition(self):
        chain = Chain()
        expected = hashlib.sha256(
            (0).to_bytes(8, "little") + ZERO_HASH + (0).to_bytes(4, "little")
        ).digest()
        assert chain.blocks[0].block_hash == expected
        assert compute_block_hash(0, ZERO_HASH, []) == expected


# --- randomized index properties ---------------------------------------------

items_strategy = st.lists(
    st.tuples(
        st.sampled_from(["a", "b", "c"]),
        st.binary(min_size=1, max_size=6),
        st.binary(max_size=6),
    ),
    min_size=1,
    max_size=4,
)
batches_strategy = st.lists(st.lists(items_strategy, max_size=5), min_size=1, max_size=5)


@settings(max_examples=60, deadline=None)
@given(batches_strategy)
def test_index_complete_sound_and_ordered(batches):
    chain = Chain()
    for name in "abc":
        chain.create_stream(name)
    confirmed_txs = []
    for batch in batches:
        for spec in batch:
            tx = tx_of(*spec)
            chain.publish(tx)
            confirmed_txs.append(tx)
        chain.confirm_block()

    assert chain.verify_chain()
    # completeness: every confirmed item is listed under its (stream, key)
    for tx in confirmed_txs:
        for item in tx.items:
            listed = chain.list_stream_key_items(item.stream, item.key)
            assert (tx.txid, item.value) in listed
    # soundness and order: listed txids really carry the key, in confirmation order
    for stream, key in {(i.stream, i.key) for t in confirmed_txs for i in t.items}:
        listed = chain.list_stream_key_items(stream, key)
        ordinals = [chain.confirmation_ordinal(txid) for txid, _ in listed]
        assert ordinals == sorted(ordinals)
        for txid, value in listed:
            tx = chain.get_raw_transaction(txid)
            assert any(i.stream == stream and i.key == key and i.value == value
                       for i in tx.items)


class TestPersistence:
    def test_file_matches_serialization(self, tmp_path):
        path = tmp_path / "node.chain"
        chain = Chain(persist_path=path)
        chain.create_stream("a")
        for i in range(25):
            chain.publish(tx_of(("a", b"%03d" % i, b"data")))
            if i % 6 == 0:
                chain.confirm_block()
        chain.confirm_block()
        assert path.read_bytes() == chain.serialize()
        assert path.stat().st_size == chain.chain_size_bytes()

    def test_reload_identical(self, tmp_path):
        path = tmp_path / "node.chain"
        chain = Chain(persist_path=path)
        chain.create_stream("a")
        txid = confirmed(chain, tx_of(("a", b"k", b"v")))

        again = Chain(persist_path=path)
        assert again.serialize() == chain.serialize()
        assert again.verify_chain()
        assert again.list_stream_key_items("a", b"k") == [(txid, b"v")]
        assert "a" in again.streams

    def test_reload_keeps_appending(self, tmp_path):
        path = tmp_path / "node.chain"
        chain = Chain(persist_path=path)
        chain.create_stream("a")
        confirmed(chain, tx_of(("a", b"k", b"v")))

        again = Chain(persist_path=path)
        confirmed(again, tx_of(("a", b"k2", b"v2")))
        assert path.stat().st_size == again.chain_size_bytes()
        assert again.verify_chain()
