const {v4} = require('uuid'), {gt} = require('semver');
