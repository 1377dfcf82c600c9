"""Conflict-driven clause-learning SAT solver over integer-literal CNF.

DIMACS conventions: variables are positive ints, a negative literal is
the complement.  The solver is incremental in the simple sense that
clauses may be added between ``solve`` calls, and each call may carry
assumption literals.  Any engine with this surface can be substituted.
"""

from __future__ import annotations


class SolverError(Exception):
    pass


_LUBY_BASE = 128


def _luby(i: int) -> int:
    # Luby restart sequence 1,1,2,1,1,2,4,...
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while (1 << k) - 1 != i:
        k -= 1
        i -= (1 << k) - 1
    return 1 << (k - 1)


class CdclSolver:
    def __init__(self):
        self.n_vars = 0
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[int]] = {}
        self.assign: list[int] = [0]  # 1-indexed; 0 unassigned, +1 true, -1 false
        self.level: list[int] = [0]
        self.reason: list[int] = [-1]  # clause index, -1 for decisions/assumptions
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.prop_head = 0
        self.activity: list[float] = [0.0]
        self.var_inc = 1.0
        self.phase: list[bool] = [False]
        self.ok = True
        self.conflicts = 0
        self.model: dict[int, bool] = {}

    # -- construction -------------------------------------------------------

    def new_var(self) -> int:
        self.n_vars += 1
        self.assign.append(0)
        self.level.append(0)
        self.reason.append(-1)
        self.activity.append(0.0)
        self.phase.append(False)
        return self.n_vars

    def _grow_to(self, v: int):
        while self.n_vars < v:
            self.new_var()

    def add_clause(self, lits) -> None:
        if not self.ok:
            return
        seen = set()
        out = []
        for lit in lits:
            if lit == 0:
                raise SolverError("literal 0")
            self._grow_to(abs(lit))
            if -lit in seen:
                return  # tautology
            if lit not in seen:
                seen.add(lit)
                out.append(lit)
        # strip literals already false at level 0, detect satisfied clauses
        if self.trail_lim:
            raise SolverError("add_clause during search")
        filtered = []
        for lit in out:
            val = self._value(lit)
            if val == 1 and self.level[abs(lit)] == 0:
                return
            if val == -1 and self.level[abs(lit)] == 0:
                continue
            filtered.append(lit)
        out = filtered
        if not out:
            self.ok = False
            return
        if len(out) == 1:
            if not self._enqueue(out[0], -1):
                self.ok = False
            elif self._propagate() != -1:
                self.ok = False
            return
        ci = len(self.clauses)
        self.clauses.append(out)
        self.watches.setdefault(out[0], []).append(ci)
        self.watches.setdefault(out[1], []).append(ci)

    # -- core ---------------------------------------------------------------

    def _value(self, lit: int) -> int:
        v = self.assign[abs(lit)]
        return v if lit > 0 else -v

    def _enqueue(self, lit: int, reason: int) -> bool:
        val = self._value(lit)
        if val == 1:
            return True
        if val == -1:
            return False
        v = abs(lit)
        self.assign[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)
        return True

    def _propagate(self) -> int:
        """Unit propagation; returns conflicting clause index or -1."""
        while self.prop_head < len(self.trail):
            lit = self.trail[self.prop_head]
            self.prop_head += 1
            falsified = -lit
            watchlist = self.watches.get(falsified)
            if not watchlist:
                continue
            kept = []
            i = 0
            while i < len(watchlist):
                ci = watchlist[i]
                i += 1
                clause = self.clauses[ci]
                # normalize: watched lits are clause[0], clause[1]
                if clause[0] == falsified:
                    clause[0], clause[1] = clause[1], clause[0]
                first = clause[0]
                if self._value(first) == 1:
                    kept.append(ci)
                    continue
                moved = False
                for j in range(2, len(clause)):
                    if self._value(clause[j]) != -1:
                        clause[1], clause[j] = clause[j], clause[1]
                        self.watches.setdefault(clause[1], []).append(ci)
                        moved = True
                        break
                if moved:
                    continue
                kept.append(ci)
                if not self._enqueue(first, ci):
                    kept.extend(watchlist[i:])
                    self.watches[falsified] = kept
                    return ci
            self.watches[falsified] = kept
        return -1

    def _bump(self, v: int):
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(1, self.n_vars + 1):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100

    def _analyze(self, confl: int) -> tuple[list[int], int]:
        """First-UIP learning; returns (learnt clause, backjump level)."""
        learnt = [0]  # placeholder for the asserting literal
        seen = [False] * (self.n_vars + 1)
        counter = 0
        resolved = 0  # literal whose reason is being expanded (0: conflict clause)
        idx = len(self.trail) - 1
        cur_level = len(self.trail_lim)
        clause = self.clauses[confl]
        while True:
            for q in clause:
                if q == resolved:
                    continue
                v = abs(q)
                if not seen[v] and self.level[v] > 0:
                    seen[v] = True
                    self._bump(v)
                    if self.level[v] == cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(self.trail[idx])]:
                idx -= 1
            resolved = self.trail[idx]
            v = abs(resolved)
            seen[v] = False
            counter -= 1
            idx -= 1
            if counter == 0:
                break
            clause = self.clauses[self.reason[v]]
        learnt[0] = -resolved
        if len(learnt) == 1:
            return learnt, 0
        # backjump to the second-highest level in the clause
        levels = sorted((self.level[abs(q)] for q in learnt[1:]), reverse=True)
        bj = levels[0]
        # move a literal of level bj into watch position 1
        for j in range(1, len(learnt)):
            if self.level[abs(learnt[j])] == bj:
                learnt[1], learnt[j] = learnt[j], learnt[1]
                break
        return learnt, bj

    def _backtrack(self, target_level: int):
        while len(self.trail_lim) > target_level:
            lim = self.trail_lim.pop()
            for lit in reversed(self.trail[lim:]):
                v = abs(lit)
                self.phase[v] = lit > 0
                self.assign[v] = 0
                self.reason[v] = -1
            del self.trail[lim:]
        self.prop_head = min(self.prop_head, len(self.trail))

    def _decide(self) -> int:
        best, best_act = 0, -1.0
        for v in range(1, self.n_vars + 1):
            if self.assign[v] == 0 and self.activity[v] > best_act:
                best, best_act = v, self.activity[v]
        if best == 0:
            return 0
        return best if self.phase[best] else -best

    def solve(self, assumptions=()) -> bool:
        """Decide satisfiability under the given assumption literals."""
        if not self.ok:
            return False
        self._backtrack(0)
        if self._propagate() != -1:
            self.ok = False
            return False
        assumptions = list(assumptions)
        restart_count = 0
        budget = _LUBY_BASE * _luby(restart_count + 1)
        conflicts_here = 0
        while True:
            confl = self._propagate()
            if confl != -1:
                self.conflicts += 1
                conflicts_here += 1
                if len(self.trail_lim) <= len(assumptions):
                    # conflict inside (or below) the assumption prefix
                    if not self.trail_lim:
                        self.ok = False
                    else:
                        self._backtrack(0)
                    return False
                learnt, bj = self._analyze(confl)
                self._backtrack(max(bj, len(assumptions)))
                if len(learnt) == 1:
                    self._backtrack(0)
                    if not self._enqueue(learnt[0], -1) or self._propagate() != -1:
                        self.ok = False
                        return False
                    # assumptions are re-installed by the main loop
                else:
                    ci = len(self.clauses)
                    self.clauses.append(learnt)
                    self.watches.setdefault(learnt[0], []).append(ci)
                    self.watches.setdefault(learnt[1], []).append(ci)
                    if not self._enqueue(learnt[0], ci):
                        self._backtrack(0)
                        return False
                self.var_inc /= 0.95
                if conflicts_here >= budget:
                    restart_count += 1
                    budget = _LUBY_BASE * _luby(restart_count + 1)
                    conflicts_here = 0
                    self._backtrack(len(assumptions))
                continue
            if len(self.trail_lim) < len(assumptions):
                lit = assumptions[len(self.trail_lim)]
                if self._value(lit) == -1:
                    self._backtrack(0)
                    return False
                self.trail_lim.append(len(self.trail))
                self._enqueue(lit, -1)
                continue
            lit = self._decide()
            if lit == 0:
                self.model = {
                    v: self.assign[v] > 0 for v in range(1, self.n_vars + 1)
                }
                self._backtrack(0)
                return True
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, -1)
