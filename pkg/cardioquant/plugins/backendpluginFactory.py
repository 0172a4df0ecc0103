# -*- coding: utf-8 -*-
import inspect
import sys

from cardioquant.plugins.backendplugin import ReportBackendPlugin


class BackendPluginFactory(object):
    """
        Report storage backends MUST be created through create():

            backend = BackendPluginFactory.create(plugin_name='sql',
                                                  url='sqlite://')
    """
    @classmethod
    def create(cls, plugin_name="sql", **kwargs):
        """
            Imports ``cardioquant.plugins.<plugin_name>`` and instantiates
            the ReportBackendPlugin subclass it defines.

            :param plugin_name: module name without .py
            :return: ReportBackendPlugin
        """
        backendplugin = None
        plugin_path = "cardioquant.plugins.{0}".format(plugin_name)
        try:
            __import__(plugin_path)
        except ImportError as error:
            raise BackendPluginException("Unknown backend {0}: {1}".format(
                plugin_name, error))
        pluginobj = sys.modules[plugin_path]
        for _, classobj in inspect.getmembers(pluginobj, inspect.isclass):
            if (inspect.getmodule(classobj).__name__ == plugin_path and
                    issubclass(classobj, ReportBackendPlugin)):
                try:
                    backendplugin = classobj(**kwargs)
                except Exception as error:
                    raise BackendPluginException("Cannot create Backend: "
                                                 "{0}".format(error))
        if backendplugin is None:
            raise BackendPluginException("{0} defines no backend".format(
                plugin_path))
        return backendplugin

    @classmethod
    def from_url(cls, url, **kwargs):
        """
            Backend for a store URL; every URL sqlalchemy understands maps
            to the sql plugin.
        """
        return cls.create(plugin_name='sql', url=url, **kwargs)


class BackendPluginException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg
