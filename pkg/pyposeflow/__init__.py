# -*- coding: utf-8 -*-

__version__ = '0.1.dev1'


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
