"""The main exploration loop: grow the confirmed-divisor set by 2-chain
expansion smallest-seed-first, route special candidates through the 3/4-chain
pairing pipeline, and drive the reciprocal ledger past the case-maximum upper
bound.

Expansion may fan out over worker processes; results are committed by a
single writer in ascending-seed order, so runs are bit-identical regardless
of worker count or completion order. Every batch ends with a committed data
module plus a checkpoint manifest; killing the process and resuming
reproduces the uninterrupted run byte for byte.

The contradiction is declared only when the ledger's lower bound exceeds the
configured bound's upper end AND the eleven bootstrap divisors have been
re-derived inside the run with their five-source exponent evidence, keeping
the stopping rule self-contained.
"""

from __future__ import annotations

import heapq
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from time import monotonic

from .arith import MR13_LIMIT, FactorBudget, factorize, primality_method, sigma_prime_power
from .bounds import (DEFAULT_DPS, DirectedReal, ReciprocalLedger, empty_ledger,
                     ledger_update, overall_bound)
from .chains import (AXIOM_SEED, BOOTSTRAP_PRIMES, Chain, ChainCertificate,
                     SpecialConfirmation, TSet, TSetEntry, canonical_tset,
                     confirm_special, verify_chain)
from .classify import is_special_candidate
from . import store

__all__ = ["ExploreConfig", "ExplorationState", "explore", "default_bound"]

ENGINE_BUDGET = FactorBudget(trial_bound=1_000_000, rho_iterations=2_500_000,
                             max_digits=48)


@dataclass(frozen=True)
class ExploreConfig:
    bound: Fraction | None = None          # None: canonical case-maximum bound
    batch_size: int = 20000
    max_seeds: int | None = None
    workers: int = 1
    budget: FactorBudget = ENGINE_BUDGET
    special_depth: int = 4
    out_dir: Path | None = None
    dps: int = DEFAULT_DPS

    def __post_init__(self) -> None:
        if self.batch_size < 1 or self.workers < 1:
            raise ValueError("batch_size and workers must be at least 1")
        if self.special_depth < 2:
            raise ValueError("special_depth must be at least 2")


@dataclass
class ExplorationState:
    tset: TSet
    ledger: ReciprocalLedger
    bound: Fraction
    contradiction: bool
    bootstrap_verified: bool
    expansions: int
    modules: list[store.DataModule]
    special_confirmed: list[int]
    set_aside: list[tuple[int, int]]
    pipeline_set_aside: list[tuple[tuple[int, ...], int]]
    out_dir: Path | None
    elapsed_seconds: float = 0.0

    @property
    def special_sum_floor7(self) -> Fraction:
        return store.reciprocal_sum_floor7(self.special_confirmed)

    def summary(self) -> store.SummaryTable:
        return store.summary_table(
            self.modules,
            special_count=len(self.special_confirmed),
            special_sum=self.special_sum_floor7,
        )


def default_bound(dps: int = DEFAULT_DPS) -> Fraction:
    """Upper end of the case-maximum bound over the canonical divisor set."""
    report = overall_bound(canonical_tset(), dps)
    return report.overall.hi_fraction()


def _expand_worker(args: tuple[int, FactorBudget]) -> tuple[int, int, tuple[int, ...], int]:
    seed, budget = args
    sigma = sigma_prime_power(seed, 4)
    fac = factorize(sigma, budget)
    return seed, sigma, fac.primes, fac.cofactor


class _Engine:
    def __init__(self, config: ExploreConfig):
        self.config = config
        self.tset = TSet()
        self.ledger = ledger_update(empty_ledger(config.dps), AXIOM_SEED)
        self.pending: list[int] = [AXIOM_SEED]
        self.pending_set: set[int] = {AXIOM_SEED}
        self.processed: set[int] = set()
        self.set_aside: list[tuple[int, int]] = []
        self.source_map: dict[int, set[int]] = {}
        # special pipeline
        self.frontier: list[tuple[int, ...]] = []        # chains awaiting extension
        self.pool: dict[int, list[tuple[int, ...]]] = {} # terminus -> chains len>=3
        self.pipeline_set_aside: list[tuple[tuple[int, ...], int]] = []
        self.special_confirmed: list[int] = []
        self.modules: list[store.DataModule] = []
        self.expansions = 0
        self.large_methods: dict[int, str] = {}
        self.contradiction = False
        # The axiom seed is in the ledger from the start; its count/sum
        # attribution goes to the module where it first appears as a child,
        # keeping module sums and ledger reconcilable.
        self.axiom_attributed = False
        self.bound: Fraction = (config.bound if config.bound is not None
                                else default_bound(config.dps))

    # --- persistence -----------------------------------------------------

    def _certificates_json(self) -> dict:
        out = {}
        for p, e in sorted(self.tset.entries.items()):
            out[str(p)] = {
                "status": e.status,
                "sources": sorted(e.sources),
                "certs": [
                    {"chain": list(c.chain.elements),
                     "flags": [int(f) for f in c.special_flags],
                     "root": c.root_justification}
                    for c in e.certificates
                ],
            }
        return out

    def checkpoint_state(self) -> dict:
        cfg = self.config
        return {
            "format": 1,
            "config": {
                "bound": [self.bound.numerator, self.bound.denominator],
                "batch_size": cfg.batch_size,
                "max_seeds": cfg.max_seeds,
                "special_depth": cfg.special_depth,
                "dps": cfg.dps,
                "budget": {
                    "trial_bound": cfg.budget.trial_bound,
                    "rho_iterations": cfg.budget.rho_iterations,
                    "max_digits": cfg.budget.max_digits,
                },
            },
            "metadata": {
                "primality": "mr13 below 3317044064679887385961981; "
                             "bpsw+mr25 with budgeted pocklington above",
                "large_prime_methods": {str(k): v for k, v in
                                        sorted(self.large_methods.items())},
            },
            "expansions": self.expansions,
            "axiom_attributed": self.axiom_attributed,
            "pending": sorted(self.pending_set),
            "processed": sorted(self.processed),
            "set_aside": [[s, c] for s, c in self.set_aside],
            "tset": self._certificates_json(),
            "sources": {str(k): sorted(v) for k, v in sorted(self.source_map.items())},
            "pipeline": {
                "frontier": [list(c) for c in self.frontier],
                "pool": {str(t): [list(c) for c in chains]
                         for t, chains in sorted(self.pool.items())},
                "set_aside": [[list(c), co] for c, co in self.pipeline_set_aside],
            },
            "special_confirmed": list(self.special_confirmed),
            "ledger": {
                "endpoints": self.ledger.sum.endpoints_raw(),
                "count": self.ledger.count,
            },
            "modules": [
                {"id": m.id, "file": store.module_filename(m.id),
                 "primes": m.count, "sum": store.format_floor7(m.module_sum),
                 "records": len(m.records)}
                for m in self.modules
            ],
            "contradiction": self.contradiction,
        }

    def restore(self, snap: dict, out_dir: Path) -> None:
        cfg = snap["config"]
        self.bound = Fraction(cfg["bound"][0], cfg["bound"][1])
        self.expansions = snap["expansions"]
        self.axiom_attributed = snap["axiom_attributed"]
        self.pending = list(snap["pending"])
        heapq.heapify(self.pending)
        self.pending_set = set(snap["pending"])
        self.processed = set(snap["processed"])
        self.set_aside = [(s, c) for s, c in snap["set_aside"]]
        self.source_map = {int(k): set(v) for k, v in snap["sources"].items()}
        self.tset = TSet()
        for p_str, info in snap["tset"].items():
            p = int(p_str)
            certs = [
                ChainCertificate(Chain(tuple(c["chain"])),
                                 tuple(bool(f) for f in c["flags"]), c["root"])
                for c in info["certs"]
            ]
            if p == AXIOM_SEED:
                entry = self.tset.entries[p]
            else:
                entry = TSetEntry(prime=p, status=info["status"])
                self.tset.entries[p] = entry
            entry.certificates.extend(certs)
            entry.sources.update(info["sources"])
        pipeline = snap["pipeline"]
        self.frontier = [tuple(c) for c in pipeline["frontier"]]
        self.pool = {int(t): [tuple(c) for c in chains]
                     for t, chains in pipeline["pool"].items()}
        self.pipeline_set_aside = [(tuple(c), co) for c, co in pipeline["set_aside"]]
        self.special_confirmed = list(snap["special_confirmed"])
        self.large_methods = {int(k): v for k, v in
                              snap["metadata"]["large_prime_methods"].items()}
        self.ledger = ReciprocalLedger(
            sum=DirectedReal.from_raw(snap["ledger"]["endpoints"], self.config.dps),
            count=snap["ledger"]["count"],
            members=frozenset(self.tset.entries),
        )
        self.modules = [store.read_module(out_dir / m["file"]) for m in snap["modules"]]
        self.contradiction = snap["contradiction"]

    def _write_specials_file(self, out_dir: Path) -> None:
        lines = ["# certificate pairs for special-confirmed divisors"]
        roots = sorted({c.chain.root
                        for t in self.special_confirmed
                        for c in self.tset.entries[t].certificates})
        lines.extend(f"assume {r}" for r in roots)
        for t in self.special_confirmed:
            lines.append(f"# terminus {t}")
            for cert in self.tset.entries[t].certificates:
                lines.append(cert.render())
        (out_dir / "specials.txt").write_text("\n".join(lines) + "\n",
                                              encoding="utf-8")

    def persist_batch(self, module: store.DataModule) -> None:
        out_dir = self.config.out_dir
        if out_dir is None:
            return
        store.write_module(module, out_dir)
        self._write_specials_file(out_dir)
        store.save_checkpoint(out_dir, self.checkpoint_state())

    # --- confirmation plumbing -------------------------------------------

    def _note_method(self, prime: int) -> None:
        if prime >= MR13_LIMIT:
            self.large_methods[prime] = primality_method(prime)

    def _admit_ordinary(self, seed: int, child: int) -> None:
        cert = ChainCertificate(
            Chain((seed, child)),
            (is_special_candidate(seed), False),
            "axiom" if seed == AXIOM_SEED else f"tset:{seed}",
        )
        entry = self.tset.add_ordinary(child, cert)
        entry.sources.update(self.source_map.get(child, ()))
        self.ledger = ledger_update(self.ledger, child)
        self._note_method(child)
        if child not in self.processed and child not in self.pending_set:
            heapq.heappush(self.pending, child)
            self.pending_set.add(child)

    def _confirm_special(self, confirmation: SpecialConfirmation) -> None:
        t = confirmation.terminus
        entry = self.tset.add_special(confirmation)
        entry.sources.update(self.source_map.get(t, ()))
        self.ledger = ledger_update(self.ledger, t)
        self.special_confirmed.append(t)
        self._note_method(t)
        for element in confirmation.certificates[0].chain.elements[1:-1]:
            self._note_method(element)
        for element in confirmation.certificates[1].chain.elements[1:-1]:
            self._note_method(element)
        # An ordinary terminus confirmed by pairing may seed further chains.
        if entry.status == "ordinary" and t not in self.processed \
                and t not in self.pending_set:
            heapq.heappush(self.pending, t)
            self.pending_set.add(t)

    # --- special pipeline --------------------------------------------------

    def _extend_pipeline(self) -> None:
        """Extend unconfirmed special chains by one element, as deep as the cap.

        A chain whose terminus got confirmed in the meantime is dropped; its
        evidence already lives in the pool and the divisor set.
        """
        depth = self.config.special_depth
        work = sorted(c for c in self.frontier
                      if len(c) < depth and c[-1] not in self.tset)
        self.frontier = []
        for chain in work:
            t = chain[-1]
            sigma = sigma_prime_power(t, 4)
            fac = factorize(sigma, self.config.budget)
            if fac.cofactor != 1:
                self.pipeline_set_aside.append((chain, fac.cofactor))
            for r in fac.primes:
                if r == t or not is_special_candidate(r):
                    continue
                extended = chain + (r,)
                self.pool.setdefault(r, []).append(extended)
                if len(extended) < depth and r not in self.tset:
                    self.frontier.append(extended)
        self.frontier.sort()

    def _certificate_for(self, chain: tuple[int, ...]) -> ChainCertificate | None:
        def resolver(root: int) -> str | None:
            if root == AXIOM_SEED:
                return "axiom"
            return f"tset:{root}" if self.tset.is_rootable(root) else None

        result = verify_chain(chain, resolver)
        return result if isinstance(result, ChainCertificate) else None

    def _pair_pipeline(self) -> None:
        """Confirm termini with two disjoint certificates, lexicographic order."""
        for t in sorted(self.pool):
            chains = sorted(set(self.pool[t]))
            if t in self.tset:
                self.pool[t] = chains[:1]
                continue
            certs = [c for c in (self._certificate_for(ch) for ch in chains)
                     if c is not None]
            confirmed = None
            for i in range(len(certs)):
                for j in range(i + 1, len(certs)):
                    result = confirm_special(certs[i], certs[j])
                    if isinstance(result, SpecialConfirmation):
                        confirmed = result
                        break
                if confirmed:
                    break
            if confirmed:
                self._confirm_special(confirmed)
                self.pool[t] = [tuple(c.chain.elements)
                                for c in confirmed.certificates]
        self.pool = {t: chains for t, chains in sorted(self.pool.items()) if chains}

    # --- bootstrap re-derivation check -------------------------------------

    def bootstrap_verified(self) -> bool:
        for p in BOOTSTRAP_PRIMES:
            entry = self.tset.entries.get(p)
            if entry is None or entry.status != "ordinary":
                return False
            if len(entry.sources) < 5:
                return False
        return True

    # --- main loop ----------------------------------------------------------

    # Seeds are dispatched in waves of fixed size: the wave pops the smallest
    # pending seeds, workers factor them in parallel, and the writer commits
    # in seed order before the next wave pops. The wave size never depends on
    # the worker count, so outputs are identical for any parallelism level.
    _WAVE = 32

    def run(self) -> None:
        cfg = self.config
        pool_exec = None
        if cfg.workers > 1:
            pool_exec = ProcessPoolExecutor(max_workers=cfg.workers)
        try:
            while not self.contradiction:
                done = self._run_batch(pool_exec)
                if done:
                    break
                if self.ledger.sum.exceeds(self.bound) and self.bootstrap_verified():
                    self.contradiction = True
                    if cfg.out_dir is not None:
                        store.save_checkpoint(cfg.out_dir, self.checkpoint_state())
        finally:
            if pool_exec is not None:
                pool_exec.shutdown()

    def _pop_wave(self, room: int) -> list[int]:
        seeds: list[int] = []
        while self.pending and len(seeds) < min(self._WAVE, room):
            q = heapq.heappop(self.pending)
            self.pending_set.discard(q)
            if q not in self.processed:
                seeds.append(q)
        return seeds

    def _run_batch(self, pool_exec) -> bool:
        """One data module of up to batch_size expansions; True when exhausted."""
        cfg = self.config
        records: list[tuple[int, int, bool]] = []
        new_ordinary: list[int] = []
        in_batch = 0
        while in_batch < cfg.batch_size:
            room = cfg.batch_size - in_batch
            if cfg.max_seeds is not None:
                room = min(room, cfg.max_seeds - self.expansions)
            if room <= 0:
                break
            seeds = self._pop_wave(room)
            if not seeds:
                break
            if pool_exec is not None:
                raw = list(pool_exec.map(_expand_worker,
                                         [(q, cfg.budget) for q in seeds],
                                         chunksize=4))
            else:
                raw = [_expand_worker((q, cfg.budget)) for q in seeds]
            for seed, _sigma, primes, cofactor in raw:
                self.processed.add(seed)
                self.expansions += 1
                in_batch += 1
                for r in primes:
                    special = is_special_candidate(r)
                    records.append((seed, r, special))
                    self.source_map.setdefault(r, set()).add(seed)
                    if r in self.tset:
                        self.tset.record_source(r, seed)
                        if r == AXIOM_SEED and not self.axiom_attributed:
                            self.axiom_attributed = True
                            new_ordinary.append(r)
                    elif special:
                        self.frontier.append((seed, r))
                    else:
                        self._admit_ordinary(seed, r)
                        new_ordinary.append(r)
                if cofactor != 1:
                    self.set_aside.append((seed, cofactor))

        if in_batch == 0:
            return True

        self._extend_pipeline()
        self._pair_pipeline()

        module = store.DataModule(
            id=len(self.modules) + 1,
            records=tuple(records),
            count=len(new_ordinary),
            module_sum=store.reciprocal_sum_floor7(new_ordinary),
        )
        self.modules.append(module)
        self.persist_batch(module)
        return False


def explore(config: ExploreConfig) -> ExplorationState:
    """Run the exploration loop to contradiction or limits; see module doc."""
    start = monotonic()
    engine = _Engine(config)
    if config.out_dir is not None:
        snap = store.load_checkpoint(config.out_dir)
        if snap is not None:
            engine.restore(snap, Path(config.out_dir))
    engine.run()
    return ExplorationState(
        tset=engine.tset,
        ledger=engine.ledger,
        bound=engine.bound,
        contradiction=engine.contradiction,
        bootstrap_verified=engine.bootstrap_verified(),
        expansions=engine.expansions,
        modules=engine.modules,
        special_confirmed=engine.special_confirmed,
        set_aside=engine.set_aside,
        pipeline_set_aside=engine.pipeline_set_aside,
        out_dir=config.out_dir,
        elapsed_seconds=monotonic() - start,
    )
