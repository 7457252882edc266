"""Deterministic multi-node replication.

N nodes share one pending pool. Each round() the next producer in a strict
round-robin confirms a block from the pool and every node applies it, so
confirmed chains stay byte-identical across nodes at all times. There is
no gossip, no forks, no background work: the same submission sequence
always yields bit-identical cluster state.
"""

from __future__ import annotations

from pathlib import Path

from .errors import UnknownNode
from .ledger import Block, Chain, ChainView, Transaction


class Cluster:
    def __init__(
        self,
        n_nodes: int = 4,
        batch_limit: int = 512,
        confirm_delay: int = 1,
        persist_dir: str | Path | None = None,
    ):
        if n_nodes < 1:
            raise ValueError("need at least one node")
        if confirm_delay < 1:
            raise ValueError("confirm_delay is whole rounds, >= 1")
        self.confirm_delay = confirm_delay
        if persist_dir is not None:
            persist_dir = Path(persist_dir)
            persist_dir.mkdir(parents=True, exist_ok=True)
        self.chains = [
            Chain(batch_limit,
                  None if persist_dir is None else persist_dir / f"node{i}.chain")
            for i in range(n_nodes)
        ]
        self._pool: list[tuple[int, Transaction]] = []  # (round submitted, tx)
        self._rounds = 0
        self.producer_log: list[int] = []

    @property
    def n_nodes(self) -> int:
        return len(self.chains)

    @property
    def pending_count(self) -> int:
        return len(self._pool)

    @property
    def streams(self) -> frozenset[str]:
        return self.chains[0].streams

    def create_stream(self, name: str) -> None:
        for chain in self.chains:
            chain.create_stream(name)

    def ensure_streams(self, names) -> None:
        for name in names:
            if name not in self.streams:
                self.create_stream(name)

    def submit(self, node: int, tx: Transaction) -> bytes:
        """Validate and queue a transaction submitted at `node`."""
        self._check_node(node)
        self.chains[0].validate_transaction(tx)
        self._pool.append((self._rounds, tx))
        return tx.txid

    def round(self) -> Block:
        """One production step: next producer confirms, everyone applies."""
        producer = len(self.producer_log) % self.n_nodes
        cutoff = self._rounds - (self.confirm_delay - 1)
        batch: list[Transaction] = []
        rest: list[tuple[int, Transaction]] = []
        limit = self.chains[0].batch_limit
        for submitted, tx in self._pool:
            if submitted <= cutoff and len(batch) < limit:
                batch.append(tx)
            else:
                rest.append((submitted, tx))
        self._pool = rest
        block = None
        for chain in self.chains:
            for tx in batch:
                chain.publish(tx)
            block = chain.confirm_block()
        self._rounds += 1
        self.producer_log.append(producer)
        return block

    def run_until_drained(self, max_rounds: int = 1_000_000) -> int:
        """Round until the pool is empty; returns the number of rounds run."""
        ran = 0
        while self.pending_count and ran < max_rounds:
            self.round()
            ran += 1
        return ran

    def query_node(self, node: int) -> ChainView:
        self._check_node(node)
        return ChainView(self.chains[node])

    def _check_node(self, node: int) -> None:
        if not 0 <= node < self.n_nodes:
            raise UnknownNode(f"node {node} not in 0..{self.n_nodes - 1}")
