"""Append-only, hash-chained, multi-stream key-value store.

The store keeps named streams (tables). A transaction carries an ordered
list of (stream, key, value) items and is identified by the SHA-256 of its
canonical serialization; blocks batch confirmed transactions and each block
hash covers (height, prev_hash, txids), so every byte of history is pinned
by the head hash. Pending transactions are invisible to reads until a block
confirms them.

Canonical serialization: every byte string is length-prefixed with a
little-endian u32; block height is a little-endian u64. The wire layout is

    block   := height u64 | prev_hash 32 | tx_count u32 | txid*32 each
               | block_hash 32 | lp(tx_body) per transaction
    tx_body := publisher u32 | item_count u32 | item*
    item    := lp(stream utf-8) | lp(key) | lp(value)

A chain file is exactly the concatenation of its block serializations, so
the on-disk size equals chain_size_bytes().
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import (
    CorruptChainFile,
    DuplicateStream,
    MalformedTransaction,
    UnknownStream,
    UnknownTxid,
)

HASH_LEN = 32
ZERO_HASH = b"\x00" * HASH_LEN

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


def _lp(data: bytes) -> bytes:
    """Length-prefix a byte string (little-endian u32)."""
    return _U32.pack(len(data)) + data


@dataclass
class StreamItem:
    stream: str
    key: bytes
    value: bytes  # zero-length values are legal (enhanced encoding)


@dataclass
class Transaction:
    txid: bytes
    publisher: int
    items: list[StreamItem]


@dataclass
class Block:
    height: int
    prev_hash: bytes
    block_hash: bytes
    txids: list[bytes]


def item_bytes(item: StreamItem) -> bytes:
    return _lp(item.stream.encode("utf-8")) + _lp(item.key) + _lp(item.value)


def transaction_body(publisher: int, items: Iterable[StreamItem]) -> bytes:
    items = list(items)
    parts = [_U32.pack(publisher), _U32.pack(len(items))]
    parts.extend(item_bytes(it) for it in items)
    return b"".join(parts)


def compute_txid(publisher: int, items: Iterable[StreamItem]) -> bytes:
    return hashlib.sha256(transaction_body(publisher, items)).digest()


def make_transaction(items: Iterable[StreamItem], publisher: int = 0) -> Transaction:
    items = list(items)
    if not items:
        raise MalformedTransaction("transaction needs at least one item")
    if publisher < 0:
        raise MalformedTransaction("publisher id must be non-negative")
    return Transaction(compute_txid(publisher, items), publisher, items)


def block_header_bytes(height: int, prev_hash: bytes, txids: list[bytes]) -> bytes:
    return b"".join([_U64.pack(height), prev_hash, _U32.pack(len(txids)), *txids])


def compute_block_hash(height: int, prev_hash: bytes, txids: list[bytes]) -> bytes:
    return hashlib.sha256(block_header_bytes(height, prev_hash, txids)).digest()


def block_bytes(block: Block, transactions: list[Transaction]) -> bytes:
    parts = [block_header_bytes(block.height, block.prev_hash, block.txids), block.block_hash]
    parts.extend(_lp(transaction_body(tx.publisher, tx.items)) for tx in transactions)
    return b"".join(parts)


class _Reader:
    """Cursor over a chain file's bytes; raises CorruptChainFile on truncation."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.data):
            raise CorruptChainFile("truncated chain file")
        out = self.data[self.pos:end]
        self.pos = end
        return out

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]

    def u64(self) -> int:
        return _U64.unpack(self.take(8))[0]

    def lp(self) -> bytes:
        return self.take(self.u32())

    @property
    def exhausted(self) -> bool:
        return self.pos >= len(self.data)


class Chain:
    """A single node's chain plus its derived lookup structures.

    Confirmed state (blocks, transactions, stream index) is never mutated or
    removed by any operation; only appends happen. `get_raw_transaction` and
    `list_stream_key_items` return stored objects directly - treat them as
    read-only.
    """

    def __init__(self, batch_limit: int = 512, persist_path: str | Path | None = None):
        if batch_limit < 1:
            raise ValueError("batch_limit must be >= 1")
        self.batch_limit = batch_limit
        self.blocks: list[Block] = []
        self._streams: set[str] = set()
        self._txs: dict[bytes, Transaction] = {}
        self._index: dict[tuple[str, bytes], list[tuple[bytes, bytes]]] = {}
        self._ordinal: dict[bytes, int] = {}
        self._pending: list[Transaction] = []
        self._size = 0
        self._persist = Path(persist_path) if persist_path is not None else None
        if self._persist is not None and self._persist.exists() and self._persist.stat().st_size:
            self._load_file(self._persist)
        else:
            genesis = Block(0, ZERO_HASH, compute_block_hash(0, ZERO_HASH, []), [])
            self._admit_block(genesis, [], persist=True)

    # ----- store primitives -------------------------------------------------

    def create_stream(self, name: str) -> None:
        if not name:
            raise ValueError("stream name must be non-empty")
        if name in self._streams:
            raise DuplicateStream(name)
        self._streams.add(name)

    def publish(self, tx: Transaction) -> bytes:
        """Queue a transaction; it stays invisible to reads until confirmed."""
        self.validate_transaction(tx)
        self._pending.append(tx)
        return tx.txid

    def confirm_block(self) -> Block:
        """Move up to batch_limit pending transactions into a new block."""
        batch = self._pending[: self.batch_limit]
        del self._pending[: len(batch)]
        prev = self.blocks[-1]
        height = prev.height + 1
        txids = [tx.txid for tx in batch]
        block = Block(height, prev.block_hash,
                      compute_block_hash(height, prev.block_hash, txids), txids)
        self._admit_block(block, batch, persist=True)
        return block

    def list_stream_key_items(self, stream: str, key: bytes) -> list[tuple[bytes, bytes]]:
        """All confirmed (txid, value) items with this exact key, in confirmation order."""
        if stream not in self._streams:
            raise UnknownStream(stream)
        return self._index.get((stream, key), [])

    def get_raw_transaction(self, txid: bytes) -> Transaction:
        try:
            return self._txs[txid]
        except KeyError:
            raise UnknownTxid(txid.hex()) from None

    def chain_size_bytes(self) -> int:
        return self._size

    def verify_chain(self) -> bool:
        """Recheck every hash and link; False means history was tampered with."""
        if not self.blocks or self.blocks[0].height != 0 or self.blocks[0].prev_hash != ZERO_HASH:
            return False
        seen: set[bytes] = set()
        prev_hash = ZERO_HASH
        for expected_height, block in enumerate(self.blocks):
            if block.height != expected_height or block.prev_hash != prev_hash:
                return False
            if block.block_hash != compute_block_hash(block.height, block.prev_hash, block.txids):
                return False
            prev_hash = block.block_hash
            for txid in block.txids:
                tx = self._txs.get(txid)
                if tx is None or tx.txid != txid:
                    return False
                if compute_txid(tx.publisher, tx.items) != txid:
                    return False
                seen.add(txid)
        return seen == set(self._txs)

    # ----- helpers ------------------------------------------------------------

    def validate_transaction(self, tx: Transaction) -> None:
        """Raise unless tx satisfies the publish preconditions."""
        if not tx.items:
            raise MalformedTransaction("transaction has no items")
        for item in tx.items:
            if not item.key:
                raise MalformedTransaction("item key must be non-empty")
            if item.stream not in self._streams:
                raise UnknownStream(item.stream)
        if compute_txid(tx.publisher, tx.items) != tx.txid:
            raise MalformedTransaction("txid does not match contents")

    def confirmation_ordinal(self, txid: bytes) -> int:
        """Position of a transaction in global confirmation order."""
        try:
            return self._ordinal[txid]
        except KeyError:
            raise UnknownTxid(txid.hex()) from None

    def serialize(self) -> bytes:
        """Canonical bytes of all confirmed state (equals the persisted file)."""
        return b"".join(
            block_bytes(b, [self._txs[t] for t in b.txids]) for b in self.blocks
        )

    @property
    def streams(self) -> frozenset[str]:
        return frozenset(self._streams)

    @property
    def height(self) -> int:
        return self.blocks[-1].height

    @property
    def tx_count(self) -> int:
        return len(self._txs)

    @property
    def pending_count(self) -> int:
        return len(self._pending)

    # ----- internals ------------------------------------------------------------

    def _admit_block(self, block: Block, batch: list[Transaction], persist: bool) -> None:
        raw = block_bytes(block, batch)
        for tx in batch:
            self._txs[tx.txid] = tx
            # re-confirmation of identical content keeps its first ordinal
            self._ordinal.setdefault(tx.txid, len(self._ordinal))
            for item in tx.items:
                self._index.setdefault((item.stream, item.key), []).append((tx.txid, item.value))
        self.blocks.append(block)
        self._size += len(raw)
        if persist and self._persist is not None:
            with open(self._persist, "ab") as fh:
                fh.write(raw)

    def _load_file(self, path: Path) -> None:
        reader = _Reader(path.read_bytes())
        while not reader.exhausted:
            height = reader.u64()
            prev_hash = reader.take(HASH_LEN)
            txids = [reader.take(HASH_LEN) for _ in range(reader.u32())]
            block_hash = reader.take(HASH_LEN)
            batch = []
            for txid in txids:
                body = _Reader(reader.lp())
                publisher = body.u32()
                items = []
                for _ in range(body.u32()):
                    try:
                        stream = body.lp().decode("utf-8")
                    except UnicodeDecodeError as exc:
                        raise CorruptChainFile(f"bad stream name: {exc}") from None
                    items.append(StreamItem(stream, body.lp(), body.lp()))
                    self._streams.add(stream)
                batch.append(Transaction(txid, publisher, items))
            block = Block(height, prev_hash, block_hash, txids)
            self._admit_block(block, batch, persist=False)
        if not self.blocks:
            raise CorruptChainFile("empty chain file")


class ChainView:
    """Read-only handle onto a chain; all query layers work against this."""

    __slots__ = ("_chain",)

    def __init__(self, chain: Chain):
        self._chain = chain

    def list_stream_key_items(self, stream: str, key: bytes) -> list[tuple[bytes, bytes]]:
        return self._chain.list_stream_key_items(stream, key)

    def get_raw_transaction(self, txid: bytes) -> Transaction:
        return self._chain.get_raw_transaction(txid)

    def confirmation_ordinal(self, txid: bytes) -> int:
        return self._chain.confirmation_ordinal(txid)

    def chain_size_bytes(self) -> int:
        return self._chain.chain_size_bytes()

    def verify_chain(self) -> bool:
        return self._chain.verify_chain()

    @property
    def streams(self) -> frozenset[str]:
        return self._chain.streams

    @property
    def height(self) -> int:
        return self._chain.height

    @property
    def tx_count(self) -> int:
        return self._chain.tx_count
