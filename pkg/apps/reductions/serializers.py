"""
Serializers for Reductions App.

Flat DFA files are goal tables with a single letter column:

    {
      "alphabet": ["a", "b"],
      "states": ["p0", "p1"],
      "initial": "p0",
      "accepting": ["p1"],
      "transitions": [{"from": "p0", "letter": ["a"], "to": "p1"},
                      {"from": "p0", "letter": ["b"], "to": "p0"},
                      {"from": "p1", "letter": ["_"], "to": "p1"}]
    }

Unlike goals, a flat DFA may accept the empty word.
"""

from typing import List

from rest_framework import serializers
from rest_framework.exceptions import ErrorDetail

from apps.games.serializers import WILDCARD, TransitionSerializer, expand_goal_table

from .models import FlatDfa


class FlatDfaSerializer(serializers.Serializer):

    alphabet = serializers.ListField(child=serializers.CharField(), allow_empty=True)
    states = serializers.ListField(child=serializers.CharField(), allow_empty=False)
    initial = serializers.CharField()
    accepting = serializers.ListField(child=serializers.CharField(), default=list)
    transitions = TransitionSerializer(many=True)

    def validate(self, attrs):
        errors: List[ErrorDetail] = []
        alphabet = attrs['alphabet']
        if not alphabet:
            errors.append(ErrorDetail("The alphabet is empty", code='empty_alphabet'))
        duplicates = sorted({symbol for symbol in alphabet if alphabet.count(symbol) > 1})
        if duplicates:
            errors.append(ErrorDetail(f"Symbols {duplicates} are listed more than once", code='duplicate_action'))
        if WILDCARD in alphabet:
            errors.append(ErrorDetail(
                f"The reserved wildcard '{WILDCARD}' cannot be a symbol",
                code='reserved_action',
            ))
        if errors:
            raise serializers.ValidationError(errors)

        table, errors = expand_goal_table(
            'dfa',
            attrs['states'],
            attrs['initial'],
            attrs['accepting'],
            attrs['transitions'],
            [alphabet],
            allow_accepting_initial=True,
        )
        if errors:
            raise serializers.ValidationError(errors)

        attrs['dfa'] = FlatDfa(
            alphabet=tuple(alphabet),
            states=table.states,
            initial=table.initial,
            accepting=table.accepting,
            delta=tuple(
                {alphabet[letter[0]]: target for letter, target in row.items()}
                for row in table.delta
            ),
        )
        return attrs

    def create(self, validated_data):
        return validated_data['dfa']

    def to_representation(self, instance):
        dfa = instance['dfa'] if isinstance(instance, dict) else instance
        return {
            'alphabet': list(dfa.alphabet),
            'states': list(dfa.states),
            'initial': dfa.states[dfa.initial],
            'accepting': [dfa.states[q] for q in sorted(dfa.accepting)],
            'transitions': [
                {'from': dfa.states[q], 'letter': [symbol], 'to': dfa.states[dfa.step(q, symbol)]}
                for q in range(dfa.size)
                for symbol in dfa.alphabet
            ],
        }
