"""
Serializers for Games App.

Supports:
- Reading a GameFile document into a validated GameSpec (wildcard expansion,
  totality and conflict checks, every violation reported with a stable code)
- Writing a GameSpec back as a canonical GameFile (one row per state and
  letter, no wildcards)

The goal-table expansion is shared with the flat DFA files of the reductions
app, which are goal tables with a single agent column.
"""

import itertools
from typing import Dict, List, Optional, Sequence, Tuple

from rest_framework import serializers
from rest_framework.exceptions import ErrorDetail

from .models import GameSpec, GoalDfa, Letter

WILDCARD = '_'

# Missing (state, letter) pairs listed before the remainder is summarized
MAX_REPORTED_GAPS = 20


class TransitionSerializer(serializers.Serializer):
    """One row of a goal table; `letter` may use the `_` wildcard."""

    letter = serializers.ListField(child=serializers.CharField(), allow_empty=False)
    to = serializers.CharField()

    def get_fields(self):
        # 'from' is a Python keyword, so it cannot be declared as an attribute
        fields = super().get_fields()
        fields['from'] = serializers.CharField()
        return fields


class AgentSerializer(serializers.Serializer):
    id = serializers.IntegerField(min_value=0)
    actions = serializers.ListField(child=serializers.CharField(), allow_empty=True)


class GoalSerializer(serializers.Serializer):
    agent = serializers.IntegerField(min_value=0)
    states = serializers.ListField(child=serializers.CharField(), allow_empty=False)
    initial = serializers.CharField()
    accepting = serializers.ListField(child=serializers.CharField(), default=list)
    transitions = TransitionSerializer(many=True)


def expand_goal_table(
    location: str,
    states: Sequence[str],
    initial: str,
    accepting: Sequence[str],
    transitions: Sequence[dict],
    alphabets: Sequence[Sequence[str]],
    allow_accepting_initial: bool = False,
) -> Tuple[Optional[GoalDfa], List[ErrorDetail]]:
    """
    Expand a goal table into a complete GoalDfa.

    Args:
        location: Prefix used in messages, e.g. "goals[1]"
        states: State names in file order
        initial: Initial state name
        accepting: Accepting state names
        transitions: Validated rows with 'from', 'letter' and 'to'
        alphabets: Action names per agent column
        allow_accepting_initial: Flat DFAs may accept the empty word

    Returns:
        (dfa, errors); dfa is None whenever errors is nonempty
    """
    errors: List[ErrorDetail] = []
    state_index: Dict[str, int] = {}
    for name in states:
        if name in state_index:
            errors.append(ErrorDetail(f"{location}: state '{name}' is listed twice", code='duplicate_state'))
        state_index.setdefault(name, len(state_index))

    if initial not in state_index:
        errors.append(ErrorDetail(f"{location}: initial state '{initial}' is not a state", code='unknown_state'))
    for name in accepting:
        if name not in state_index:
            errors.append(ErrorDetail(f"{location}: accepting state '{name}' is not a state", code='unknown_state'))
    if initial in accepting and not allow_accepting_initial:
        errors.append(ErrorDetail(
            f"{location}: initial state '{initial}' must not be accepting (empty traces satisfy no goal)",
            code='accepting_initial_state',
        ))

    action_index = [{name: i for i, name in enumerate(names)} for names in alphabets]
    targets: Dict[Tuple[int, Letter], Tuple[int, int]] = {}
    reported_conflicts = set()

    for row, transition in enumerate(transitions):
        where = f"{location}.transitions[{row}]"
        source, target, letter = transition['from'], transition['to'], transition['letter']
        usable = True
        for name in (source, target):
            if name not in state_index:
                errors.append(ErrorDetail(f"{where}: '{name}' is not a state", code='unknown_state'))
                usable = False
        if len(letter) != len(alphabets):
            errors.append(ErrorDetail(
                f"{where}: letter {letter} needs {len(alphabets)} components",
                code='letter_arity',
            ))
            continue

        choices = []
        for agent, name in enumerate(letter):
            if name == WILDCARD:
                choices.append(range(len(alphabets[agent])))
            elif name in action_index[agent]:
                choices.append((action_index[agent][name],))
            else:
                errors.append(ErrorDetail(
                    f"{where}: '{name}' is not an action of agent {agent}",
                    code='unknown_action_in_transition',
                ))
                usable = False
        if not usable:
            continue

        source_q, target_q = state_index[source], state_index[target]
        for concrete in itertools.product(*choices):
            previous = targets.get((source_q, concrete))
            if previous is None:
                targets[(source_q, concrete)] = (target_q, row)
            elif previous[0] != target_q and (previous[1], row) not in reported_conflicts:
                reported_conflicts.add((previous[1], row))
                names = [alphabets[i][a] for i, a in enumerate(concrete)]
                errors.append(ErrorDetail(
                    f"{location}.transitions[{previous[1]}] and {where} disagree on "
                    f"('{source}', {names}): '{states[previous[0]]}' vs '{target}'",
                    code='wildcard_conflict',
                ))

    if errors:
        return None, errors

    letters = list(itertools.product(*(range(len(names)) for names in alphabets)))
    missing = [
        (q, letter)
        for q in range(len(states))
        for letter in letters
        if (q, letter) not in targets
    ]
    for q, letter in missing[:MAX_REPORTED_GAPS]:
        names = [alphabets[i][a] for i, a in enumerate(letter)]
        errors.append(ErrorDetail(
            f"{location}: no transition from '{states[q]}' on {names}",
            code='non_total_transition',
        ))
    if len(missing) > MAX_REPORTED_GAPS:
        errors.append(ErrorDetail(
            f"{location}: ... and {len(missing) - MAX_REPORTED_GAPS} more missing transitions",
            code='non_total_transition',
        ))
    if errors:
        return None, errors

    dfa = GoalDfa(
        states=tuple(states),
        initial=state_index[initial],
        accepting=frozenset(state_index[name] for name in accepting),
        delta=tuple(
            {letter: targets[(q, letter)][0] for letter in letters}
            for q in range(len(states))
        ),
    )
    return dfa, []


def goal_table(dfa: GoalDfa, format_letter) -> dict:
    """Canonical goal table: one row per state and letter, in canonical order."""
    return {
        'states': list(dfa.states),
        'initial': dfa.state_name(dfa.initial),
        'accepting': [dfa.state_name(q) for q in sorted(dfa.accepting)],
        'transitions': [
            {
                'from': dfa.state_name(q),
                'letter': list(format_letter(letter)),
                'to': dfa.state_name(target),
            }
            for q in range(dfa.size)
            for letter, target in dfa.delta[q].items()
        ],
    }


class GameFileSerializer(serializers.Serializer):
    """
    Serializer for GameFile documents.

    Two directions:
    1. data=<document>: validates and `save()` returns the GameSpec
    2. instance=<GameSpec>: `.data` is the canonical document
    """

    agents = AgentSerializer(many=True, allow_empty=False)
    goals = GoalSerializer(many=True)

    def validate(self, attrs):
        errors: List[ErrorDetail] = []
        agents = attrs['agents']
        ids = [agent['id'] for agent in agents]
        if ids != list(range(len(agents))):
            errors.append(ErrorDetail(
                f"Agent ids must be 0..{len(agents) - 1} in order, got {ids}",
                code='agent_ids',
            ))

        alphabets = []
        for agent in agents:
            names = agent['actions']
            if not names:
                errors.append(ErrorDetail(f"Agent {agent['id']} has no actions", code='empty_alphabet'))
            duplicates = sorted({name for name in names if names.count(name) > 1})
            if duplicates:
                errors.append(ErrorDetail(
                    f"Agent {agent['id']} lists actions {duplicates} more than once",
                    code='duplicate_action',
                ))
            if WILDCARD in names:
                errors.append(ErrorDetail(
                    f"Agent {agent['id']} uses the reserved wildcard '{WILDCARD}' as an action",
                    code='reserved_action',
                ))
            alphabets.append(tuple(names))

        goals_by_agent = {}
        for index, goal in enumerate(attrs['goals']):
            owner = goal['agent']
            if owner >= len(agents):
                errors.append(ErrorDetail(f"goals[{index}] belongs to unknown agent {owner}", code='unknown_agent'))
            elif owner in goals_by_agent:
                errors.append(ErrorDetail(f"Agent {owner} has more than one goal", code='duplicate_goal'))
            else:
                goals_by_agent[owner] = (index, goal)
        for agent in range(len(agents)):
            if agent not in goals_by_agent:
                errors.append(ErrorDetail(f"Agent {agent} has no goal", code='missing_goal'))

        if errors:
            raise serializers.ValidationError(errors)

        dfas = []
        for agent in range(len(agents)):
            index, goal = goals_by_agent[agent]
            dfa, goal_errors = expand_goal_table(
                f"goals[{index}]",
                goal['states'],
                goal['initial'],
                goal['accepting'],
                goal['transitions'],
                alphabets,
            )
            errors.extend(goal_errors)
            dfas.append(dfa)

        if errors:
            raise serializers.ValidationError(errors)

        attrs['game'] = GameSpec(actions=tuple(alphabets), goals=tuple(dfas))
        return attrs

    def create(self, validated_data):
        return validated_data['game']

    def to_representation(self, instance):
        game = instance['game'] if isinstance(instance, dict) else instance
        return {
            'agents': [
                {'id': agent, 'actions': list(game.actions[agent])}
                for agent in game.agents
            ],
            'goals': [
                {'agent': agent, **goal_table(game.goals[agent], game.format_letter)}
                for agent in game.agents
            ],
        }
