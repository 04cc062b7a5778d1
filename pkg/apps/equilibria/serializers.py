"""
Serializers for Equilibria App.

VerdictSerializer renders a Verdict as a VerdictFile line. Letters are
written with action names, so the game must be passed in the context:

    VerdictSerializer(verdict, context={'game': game}).data
"""

from rest_framework import serializers

from apps.games.models import Lasso


class LassoField(serializers.Field):
    """Read-only prefix . cycle^omega as {'prefix': [[action, ...]], 'cycle': [...]}."""

    def __init__(self, **kwargs):
        kwargs['read_only'] = True
        super().__init__(**kwargs)

    def to_representation(self, lasso: Lasso):
        game = self.context['game']
        return {
            'prefix': [list(game.format_letter(letter)) for letter in lasso.prefix],
            'cycle': [list(game.format_letter(letter)) for letter in lasso.cycle],
        }


class VerdictSerializer(serializers.Serializer):
    """Read-only rendering of a Verdict."""

    winning_set = serializers.SerializerMethodField()
    exists = serializers.BooleanField()
    witness = LassoField(allow_null=True)
    stats = serializers.SerializerMethodField()

    def get_winning_set(self, verdict):
        return sorted(verdict.winning_set)

    def get_stats(self, verdict):
        return {
            'explored_states': verdict.explored,
            'elapsed_seconds': round(verdict.elapsed, 6),
        }
