"""
Serializers for Synthesis App.

Profile files describe a ProfileTransducer mode by mode:

    {
      "initial": 0,
      "modes": [
        {"id": 0, "label": "trace:0", "output": ["a", "x"],
         "next": [{"letter": ["a", "x"], "to": 0}, ...]},
        ...
      ]
    }

`next` must list every joint letter exactly once. The game is passed in the
context to translate action names:

    ProfileSerializer(data=document, context={'game': game})
"""

from typing import List

from rest_framework import serializers
from rest_framework.exceptions import ErrorDetail

from apps.equilibria.serializers import LassoField

from .models import ProfileTransducer


class ObservationSerializer(serializers.Serializer):
    letter = serializers.ListField(child=serializers.CharField(), allow_empty=False)
    to = serializers.IntegerField(min_value=0)


class ModeSerializer(serializers.Serializer):
    id = serializers.IntegerField(min_value=0)
    label = serializers.CharField(required=False, allow_blank=True, default='')
    output = serializers.ListField(child=serializers.CharField(), allow_empty=False)
    next = ObservationSerializer(many=True)


class ProfileSerializer(serializers.Serializer):
    """Two directions, as GameFileSerializer: data -> ProfileTransducer, instance -> document."""

    initial = serializers.IntegerField(min_value=0)
    modes = ModeSerializer(many=True, allow_empty=False)

    def validate(self, attrs):
        game = self.context['game']
        modes = attrs['modes']
        errors: List[ErrorDetail] = []

        ids = [mode['id'] for mode in modes]
        if ids != list(range(len(modes))):
            errors.append(ErrorDetail(f"Mode ids must be 0..{len(modes) - 1} in order, got {ids}", code='mode_ids'))
        if attrs['initial'] >= len(modes):
            errors.append(ErrorDetail(f"Initial mode {attrs['initial']} does not exist", code='unknown_mode'))

        outputs, transitions = [], []
        for index, mode in enumerate(modes):
            where = f"modes[{index}]"
            try:
                outputs.append(game.parse_letter(mode['output']))
            except ValueError as exc:
                errors.append(ErrorDetail(f"{where}.output: {exc}", code='invalid_letter'))

            table = {}
            for row, observation in enumerate(mode['next']):
                try:
                    observed = game.parse_letter(observation['letter'])
                except ValueError as exc:
                    errors.append(ErrorDetail(f"{where}.next[{row}]: {exc}", code='invalid_letter'))
                    continue
                if observed in table:
                    errors.append(ErrorDetail(
                        f"{where}.next[{row}]: {observation['letter']} is listed twice",
                        code='duplicate_observation',
                    ))
                if observation['to'] >= len(modes):
                    errors.append(ErrorDetail(
                        f"{where}.next[{row}]: mode {observation['to']} does not exist",
                        code='unknown_mode',
                    ))
                table[observed] = observation['to']

            missing = [letter for letter in game.letters if letter not in table]
            if missing:
                names = [list(game.format_letter(letter)) for letter in missing[:5]]
                errors.append(ErrorDetail(
                    f"{where}: no successor for {names}" + (' ...' if len(missing) > 5 else ''),
                    code='non_total_transition',
                ))
            transitions.append({letter: table.get(letter) for letter in game.letters})

        if errors:
            raise serializers.ValidationError(errors)

        attrs['profile'] = ProfileTransducer(
            outputs=tuple(outputs),
            transitions=tuple(transitions),
            labels=tuple(mode['label'] for mode in modes),
            initial=attrs['initial'],
        )
        return attrs

    def create(self, validated_data):
        return validated_data['profile']

    def to_representation(self, instance):
        game = self.context['game']
        profile = instance['profile'] if isinstance(instance, dict) else instance
        return {
            'initial': profile.initial,
            'modes': [
                {
                    'id': mode,
                    'label': profile.labels[mode],
                    'output': list(game.format_letter(profile.output(mode))),
                    'next': [
                        {'letter': list(game.format_letter(letter)), 'to': target}
                        for letter, target in profile.transitions[mode].items()
                    ],
                }
                for mode in range(profile.size)
            ],
        }


class DeviationCheckSerializer(serializers.Serializer):
    agent = serializers.IntegerField()
    passed = serializers.BooleanField()
    counterexample = serializers.SerializerMethodField()
    explored = serializers.IntegerField()

    def get_counterexample(self, check):
        if check.counterexample is None:
            return None
        game = self.context['game']
        return [list(game.format_letter(letter)) for letter in check.counterexample]


class ProfileReportSerializer(serializers.Serializer):
    """Read-only rendering of a ProfileReport."""

    winning_set = serializers.SerializerMethodField()
    passed = serializers.BooleanField()
    primary_passed = serializers.BooleanField()
    primary_trace = LassoField()
    primary_winners = serializers.SerializerMethodField()
    deviations = DeviationCheckSerializer(many=True)

    def get_winning_set(self, report):
        return sorted(report.winning_set)

    def get_primary_winners(self, report):
        return sorted(report.primary_winners)
