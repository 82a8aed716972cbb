# Copyright 2019-2020 The cavity-lock Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the 'License'). You
# may not use this file except in compliance with the License. A copy of
# the License is located at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# or in the 'license' file accompanying this file. This file is
# distributed on an 'AS IS' BASIS, WITHOUT WARRANTIES OR CONDITIONS OF
# ANY KIND, either express or implied. See the License for the specific
# language governing permissions and limitations under the License.
"""Key partitioning for run configurations and the read-only mapping base of RunEnv."""
from __future__ import absolute_import

import collections

import six

try:
    from collections import abc
except ImportError:  # pragma: no cover
    abc = collections

SplitResult = collections.namedtuple("SplitResult", "included excluded")


def split_by_keys(dictionary, keys):  # type: (dict, set or list or tuple) -> SplitResult
    """Split a configuration in two: the entries named in ``keys`` and everything else.

    Args:
        dictionary (dict[str, object]): raw configuration.
        keys (sequence[str]): names that go to the included side. A bare string is
            treated as a single key.

    Returns:
        (SplitResult): ``included`` and ``excluded`` dictionaries.
    """
    if isinstance(keys, six.string_types):
        keys = [keys]
    wanted = frozenset(keys or ())

    included, excluded = {}, {}
    for key, value in dictionary.items():
        (included if key in wanted else excluded)[key] = value
    return SplitResult(included=included, excluded=excluded)


def partition(dictionary, *key_groups):  # type: (dict, *set) -> list
    """One dictionary per key group, in order, followed by the unclaimed entries.

    A key listed in more than one group goes to the first.
    """
    groups = []
    rest = dict(dictionary)
    for keys in key_groups:
        split = split_by_keys(rest, keys)
        groups.append(split.included)
        rest = split.excluded
    groups.append(rest)
    return groups


class MappingMixin(abc.Mapping):
    """Exposes the public properties of a snapshot object as a read-only dict.

    Plain attributes and methods are not part of the mapping; indexing them raises
    KeyError.
    """

    def properties(self):  # type: () -> list
        """(list[str]): names of the public properties, sorted."""
        cls = type(self)
        return [name for name in dir(cls) if self._is_property(name)]

    def _is_property(self, name):
        return not name.startswith("_") and isinstance(getattr(type(self), name, None), property)

    def __getitem__(self, k):
        if not self._is_property(k):
            raise KeyError("Trying to access non property %s" % k)
        return getattr(self, k)

    def __len__(self):
        return len(self.properties())

    def __iter__(self):
        return iter(self.properties())

    def __str__(self):
        return str(dict(self))
