"""
Service layer for strategy synthesis and profile verification.

synthesize_profile turns an accepting lasso of A'_W into a transducer:
- on-trace modes replay the lasso
- a single deviation by an agent j outside W switches to j's safety modes,
  which follow strategy0 of G_j and keep A^j out of its accepting states
- anything else ends in a sink mode

verify_profile checks any transducer against the W-NE conditions exactly:
the primary trace is a lasso, and each deviation check is a reachability
question over the finite product of modes and goal states.
"""

import logging
from collections import deque
from functools import partial
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Tuple

from apps.equilibria.services import accepts_lasso, apw_initial, apw_step, check_winning_set
from apps.games.exceptions import LassoNotAccepting
from apps.games.models import GameSpec, Lasso, Letter
from apps.games.services import project_out, winning_set_of
from apps.safety.models import SafetySolution
from apps.safety.services import SafetyService

from .models import DeviationCheck, ProfileReport, ProfileTransducer

logger = logging.getLogger(__name__)

SINK = ('sink',)


def with_component(projected: Tuple[int, ...], j: int, action: int) -> Letter:
    """Re-insert agent j's component into a projected letter."""
    return tuple(projected[:j]) + (action,) + tuple(projected[j:])


def synthesize_profile(
    game: GameSpec,
    winning_set: Iterable[int],
    lasso: Lasso,
    solutions: Mapping[int, SafetySolution],
    minimize: bool = True,
) -> ProfileTransducer:
    """
    Build a finite-state W-NE profile whose primary trace is `lasso`.

    Raises:
        LassoNotAccepting: `lasso` is not an accepting word of A'_W
        MissingSolution: a deviator outside W has no entry in `solutions`
    """
    winning_set = check_winning_set(game, winning_set)
    outside = [j for j in game.agents if j not in winning_set]
    SafetyService.require(solutions, game, outside)
    guarded = {j: solutions[j] for j in outside if game.has_choice(j)}
    accepted = accepts_lasso(
        apw_initial(game, winning_set, guarded),
        partial(apw_step, game, winning_set, guarded),
        lambda state: state.accepting,
        lasso,
    )
    if not accepted:
        raise LassoNotAccepting(f"The lasso is not an accepting word of A'_W for W={sorted(winning_set)}")

    deviators = sorted(guarded)
    goals = game.goals

    # Mode keys: ('trace', position, deviator states), ('safe', j, q) or SINK
    index: Dict[Hashable, int] = {}
    keys: List[Hashable] = []

    def mode_of(key: Hashable) -> int:
        if key not in index:
            index[key] = len(keys)
            keys.append(key)
        return index[key]

    def output_of(key: Hashable) -> Letter:
        if key == SINK:
            return game.least_letter()
        if key[0] == 'trace':
            return lasso.letter_at(key[1])
        _, j, q = key
        return with_component(guarded[j].strategy0[q].components, j, 0)

    def successor_key(key: Hashable, output: Letter, observed: Letter) -> Hashable:
        if key == SINK:
            return SINK
        if key[0] == 'safe':
            _, j, q = key
            if project_out(observed, j) != project_out(output, j):
                return SINK
            return ('safe', j, goals[j].step(q, observed))

        _, position, states = key
        if observed == output:
            advanced = tuple(goals[j].step(q, observed) for j, q in zip(deviators, states))
            return ('trace', lasso.next_position(position), advanced)
        differing = [i for i in game.agents if observed[i] != output[i]]
        if len(differing) == 1 and differing[0] in guarded:
            j = differing[0]
            return ('safe', j, goals[j].step(states[deviators.index(j)], observed))
        return SINK

    initial_key = ('trace', 0, tuple(goals[j].initial for j in deviators))
    mode_of(initial_key)
    outputs: List[Letter] = []
    transitions: List[Dict[Letter, int]] = []
    pending = 0
    while pending < len(keys):
        key = keys[pending]
        output = output_of(key)
        outputs.append(output)
        transitions.append({
            observed: mode_of(successor_key(key, output, observed))
            for observed in game.letters
        })
        pending += 1

    labels = tuple(label_of(game, key) for key in keys)
    transducer = ProfileTransducer(tuple(outputs), tuple(transitions), labels, initial=0)
    logger.info(f"Synthesized profile with {transducer.size} modes for W={sorted(winning_set)}")
    if minimize:
        transducer = minimize_profile(transducer)
        logger.debug(f"Minimized profile has {transducer.size} modes")
    return transducer


def label_of(game: GameSpec, key: Hashable) -> str:
    if key == SINK:
        return 'sink'
    if key[0] == 'trace':
        return f"trace:{key[1]}"
    _, j, q = key
    return f"deviation:{j}:{game.goals[j].state_name(q)}"


def minimize_profile(transducer: ProfileTransducer) -> ProfileTransducer:
    """
    Merge modes with the same behaviour (Moore partition refinement).

    Blocks start from equal outputs and split on the blocks of their
    successors until stable. Blocks are numbered in breadth-first order from
    the initial mode and keep the label of the first mode reached; modes
    unreachable from the initial mode are dropped.
    """
    reachable = [transducer.initial]
    seen = {transducer.initial}
    for mode in reachable:
        for target in transducer.transitions[mode].values():
            if target not in seen:
                seen.add(target)
                reachable.append(target)
    reachable.sort()

    letters = list(transducer.transitions[transducer.initial])
    block = {mode: transducer.output(mode) for mode in reachable}
    while True:
        signature = {
            mode: (block[mode],) + tuple(block[transducer.step(mode, letter)] for letter in letters)
            for mode in reachable
        }
        numbering: Dict[Hashable, int] = {}
        refined = {mode: numbering.setdefault(signature[mode], len(numbering)) for mode in reachable}
        stable = len(numbering) == len(set(block.values()))
        block = refined
        if stable:
            break

    # renumber so the initial mode's block comes first
    order: Dict[int, int] = {}
    queue = deque([transducer.initial])
    order[block[transducer.initial]] = 0
    representative = {0: transducer.initial}
    while queue:
        mode = queue.popleft()
        for letter in letters:
            target = transducer.step(mode, letter)
            if block[target] not in order:
                order[block[target]] = len(order)
                representative[order[block[target]]] = target
                queue.append(target)

    size = len(order)
    return ProfileTransducer(
        outputs=tuple(transducer.output(representative[m]) for m in range(size)),
        transitions=tuple(
            {letter: order[block[transducer.step(representative[m], letter)]] for letter in letters}
            for m in range(size)
        ),
        labels=tuple(transducer.labels[representative[m]] for m in range(size)),
        initial=0,
    )


def primary_trace(transducer: ProfileTransducer) -> Lasso:
    """The trace produced when every agent follows the profile."""
    first_visit: Dict[int, int] = {}
    trace: List[Letter] = []
    mode = transducer.initial
    while mode not in first_visit:
        first_visit[mode] = len(trace)
        output = transducer.output(mode)
        trace.append(output)
        mode = transducer.step(mode, output)
    start = first_visit[mode]
    return Lasso(prefix=tuple(trace[:start]), cycle=tuple(trace[start:]))


def check_deviations(game: GameSpec, transducer: ProfileTransducer, j: int) -> DeviationCheck:
    """
    Can agent j reach its goal by deviating alone?

    Breadth-first search over (mode, state of A^j) where agent j's component
    of each observed letter ranges over all of its actions.
    """
    goal = game.goals[j]
    start = (transducer.initial, goal.initial)
    parent: Dict[Tuple[int, int], Optional[Tuple[Tuple[int, int], Letter]]] = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        mode, q = node
        output = transducer.output(mode)
        for action in range(len(game.actions[j])):
            observed = output[:j] + (action,) + output[j + 1:]
            target_q = goal.step(q, observed)
            if goal.is_accepting(target_q):
                path = [observed]
                while parent[node] is not None:
                    node, letter = parent[node]
                    path.append(letter)
                path.reverse()
                return DeviationCheck(j, False, tuple(path), len(parent))
            successor = (transducer.step(mode, observed), target_q)
            if successor not in parent:
                parent[successor] = (node, observed)
                queue.append(successor)
    return DeviationCheck(j, True, None, len(parent))


def verify_profile(game: GameSpec, winning_set: Iterable[int], transducer: ProfileTransducer) -> ProfileReport:
    """Check the primary-trace condition and every deviation condition for W."""
    winning_set = check_winning_set(game, winning_set)
    trace = primary_trace(transducer)
    report = ProfileReport(
        winning_set=winning_set,
        primary_trace=trace,
        primary_winners=winning_set_of(game, trace),
        deviations=[check_deviations(game, transducer, j) for j in game.agents if j not in winning_set],
    )
    if not report.passed:
        logger.warning(f"Profile fails the W-NE conditions for W={sorted(winning_set)}")
    return report


class ProfileService:

    @staticmethod
    def synthesize_for_verdict(
        game: GameSpec, verdict, solutions: Mapping[int, SafetySolution],
    ) -> Optional[ProfileTransducer]:
        """Profile for a positive verdict, None otherwise."""
        if not verdict.exists:
            return None
        return synthesize_profile(game, verdict.winning_set, verdict.witness, solutions)
