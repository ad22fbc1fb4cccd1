# SPDX-License-Identifier: Apache-2.0

# First Party
from samsde import lab

lab.samsde(None, None)
