import logging
from pyee import EventEmitter as SyncEventEmitter

from volta.util.helper import is_callable

# pyee's event emitter doesn't support attaching a listener to all events
# so to patch it, we create a wrapper which uses two event emitters, one
# is used to listen to all events and this arbitrary string is the event name
# used to emit all events on that listener
_all_event = 'all'

log = logging.getLogger(__name__)


def _is_named_event_args(*args):
    return len(args) == 2 and is_callable(args[1])


def _is_all_event_args(*args):
    return len(args) == 1 and is_callable(args[0])


class EventEmitter:
    """
    A generic interface for event registration and delivery. The Trainer emits its per-step
    loss reports, checkpoint writes and divergence through it.

    Methods
    -------
    on(*args)
        Register a listener for one event or for all events
    once(*args)
        Register a listener for the next matching event only
    off()
        Deregister listeners
    """

    def __init__(self):
        self.__named_event_emitter = SyncEventEmitter()
        self.__all_event_emitter = SyncEventEmitter()
        self.__wrapped_listeners = {}

    def __resolve(self, method, *args):
        if _is_all_event_args(*args):
            return _all_event, args[0], self.__all_event_emitter
        elif _is_named_event_args(*args):
            return args[0], args[1], self.__named_event_emitter
        raise ValueError("EventEmitter.%s(): invalid args" % method)

    def __wrap(self, listener):
        def wrapped_listener(*args, **kwargs):
            try:
                listener(*args, **kwargs)
            except Exception as err:
                log.exception(f'EventEmitter.emit(): uncaught listener exception: {err}')

        self.__wrapped_listeners[listener] = wrapped_listener
        return wrapped_listener

    def on(self, *args):
        """
        Registers the provided listener for the specified event, if provided, and otherwise for all
        events. A listener that raises never interrupts the emitter; the exception is logged.

        Parameters
        ----------
        name : str
            The named event to listen for.
        listener : callable
            The event listener.
        """
        event, listener, emitter = self.__resolve('on', *args)
        emitter.add_listener(event, self.__wrap(listener))

    def once(self, *args):
        """
        Registers the provided listener for the first event that is emitted.

        Parameters
        ----------
        name : str
            The named event to listen for.
        listener : callable
            The event listener.
        """
        event, listener, emitter = self.__resolve('once', *args)
        emitter.once(event, self.__wrap(listener))

    def off(self, *args):
        """
        Removes all registrations that match both the specified listener and, if provided, the
        specified event. If called with no arguments, deregisters all registrations.
        """
        if len(args) == 0:
            self.__all_event_emitter.remove_all_listeners()
            self.__named_event_emitter.remove_all_listeners()
            return

        event, listener, emitter = self.__resolve('off', *args)
        wrapped_listener = self.__wrapped_listeners.get(listener)

        if wrapped_listener is None:
            return

        emitter.remove_listener(event, wrapped_listener)
        self.__wrapped_listeners[listener] = None

    def _emit(self, *args):
        self.__named_event_emitter.emit(*args)
        self.__all_event_emitter.emit(_all_event, *args[1:])
