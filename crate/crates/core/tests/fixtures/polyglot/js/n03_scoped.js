import x from '@org/pkg/deep';
const y = require('@babel/core');
