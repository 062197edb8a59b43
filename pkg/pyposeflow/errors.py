# -*- coding: utf-8 -*-

'''pyposeflow exceptions.'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'strerror',
        'PoseFlowError',
        'UsageError',
        'ValidationError',
        'NumericalError',
        'DomainError',
        ]

from . import constants

_MESSAGES = {
        constants.OK: 'success',
        constants.USAGE_ERROR: 'invalid usage',
        constants.VALIDATION_ERROR: 'validation failure',
        constants.NUMERICAL_ERROR: 'numerical failure',
        }


def strerror(errno):
    return _MESSAGES.get(errno, 'unknown error')


class PoseFlowError(RuntimeError):
    errno = constants.VALIDATION_ERROR

    def __init__(self, detail, errno=None):
        if errno is not None:
            self.errno = errno
        msg = strerror(self.errno)
        super(PoseFlowError, self).__init__(self.errno, msg, detail)

        self.message, self.detail = msg, detail

    def __unicode__(self):
        return '[PoseFlow Error {0}] {1}: {2}'.format(
                self.errno,
                self.message,
                self.detail,
                )

    def __str__(self):
        return str(self.__unicode__())


class UsageError(PoseFlowError):
    errno = constants.USAGE_ERROR


class ValidationError(PoseFlowError):
    errno = constants.VALIDATION_ERROR


class NumericalError(PoseFlowError):
    '''Non-finite loss or gradient.

    ``where`` names the offending sample index or parameter.
    '''

    errno = constants.NUMERICAL_ERROR

    def __init__(self, detail, where=None):
        if where is not None:
            detail = '{0} (at {1})'.format(detail, where)
        super(NumericalError, self).__init__(detail)
        self.where = where


class DomainError(PoseFlowError, ValueError):
    '''Input outside the open support ball of a transform.'''

    errno = constants.NUMERICAL_ERROR


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
